"""Command-line front-end: run configs, subcommands and verify-all."""

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from disperse_lab import __version__
from disperse_lab.analysis.dispersive import (
    aq_decay_series,
    decay_fit,
    global_profile,
    lq_decay_series,
    opnorm_L1_to_Lq,
    profile_ratios,
)
from disperse_lab.analysis.kernels import (
    KernelGrid,
    branch_coverage,
    default_profile,
    kernel_Lq_norm,
    lq_grid,
    profile_value,
    schrodinger_kernel,
    schrodinger_kernel_numeric,
    verify_pointwise_bound,
)
from disperse_lab.evolution.schrodinger_flow import duhamel_solve, gaussian_bump
from disperse_lab.evolution.strichartz import scattering_residual, strichartz_report
from disperse_lab.geometry.lie_data import (
    Space,
    catalog,
    class_s_note,
    make_complex_group_space,
    parse_space,
    rho_norm,
)
from disperse_lab.geometry.spherical import make_grid
from disperse_lab.groups.automorphic import automorphic_kernel, class_gate, quotient_Lq_norm
from disperse_lab.groups.catalog import dump_group, group_from_name, load_group
from disperse_lab.groups.discrete_group import (
    DEFAULT_BUDGET,
    DiscreteGroup,
    Model,
    enumerate_orbit,
)
from disperse_lab.groups.poincare import (
    critical_exponent_estimate,
    growth_function,
    poincare_series,
)
from disperse_lab.storage.artifacts import emit_plot, write_json, write_radial_csv, write_table_csv
from disperse_lab.storage.run_history import RunLedgerDB
from disperse_lab.utils.config import Settings
from disperse_lab.utils.errors import (
    ClassViolationError,
    ConfigError,
    DisperseLabError,
    DomainError,
    UnsupportedSpaceError,
)
from disperse_lab.utils.logger import setup_logger
from disperse_lab.verification.acceptance import AcceptanceSuite, format_summary, write_summary

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COMMANDS = ("lie", "kernel", "group", "dispersive", "nls", "verify-all")
GROUP_OPS = ("orbit", "poincare", "delta", "growth", "autokernel", "lqnorm")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2


@dataclass
class RunConfig:
    """One subcommand invocation; the JSON/YAML run-config schema (version 1)."""

    command: str
    schema_version: int = SCHEMA_VERSION
    space: str = "H3"
    group: Optional[str] = None
    times: List[float] = field(default_factory=list)
    t_range: Optional[str] = None
    q: float = 4.0
    grid_n: Optional[int] = None
    fit: bool = False
    op: Optional[str] = None
    s: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    growth: int = 6
    radius: float = 8.0
    budget: int = DEFAULT_BUDGET
    gamma: float = 2.0
    eps: float = 1e-2
    T: float = 20.0
    dt: float = 0.02
    pairs: List[str] = field(default_factory=lambda: ["2,6;2,6"])
    samples: int = 200_000
    seed: Optional[int] = None
    out: Optional[str] = None
    checks: List[str] = field(default_factory=list)
    overrides: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(
                f"config.command: expected one of {list(COMMANDS)}, got {self.command!r}"
            )
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"config.schema_version: expected {SCHEMA_VERSION}, got {self.schema_version!r}"
            )
        if self.op is not None and self.op not in GROUP_OPS:
            raise ConfigError(f"config.op: expected one of {list(GROUP_OPS)}, got {self.op!r}")

    @classmethod
    def from_mapping(cls, data: Any, source: str = "config") -> "RunConfig":
        """Validate a parsed config document.

        Raises:
            ConfigError: Unknown field, missing field or wrong type (with field path)
        """
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"{source}: unknown field(s) {', '.join(unknown)}")
        if "schema_version" not in data:
            raise ConfigError(f"{source}: missing required field 'schema_version'")
        if "command" not in data:
            raise ConfigError(f"{source}: missing required field 'command'")
        values = {name: _coerce(name, value, source) for name, value in data.items()}
        return cls(**values)


_FLOAT_FIELDS = {"q", "gamma", "eps", "T", "dt", "radius"}
_INT_FIELDS = {"schema_version", "growth", "samples", "budget"}
_OPTIONAL_INT_FIELDS = {"seed", "grid_n"}
_STR_FIELDS = {"command", "space"}
_OPTIONAL_STR_FIELDS = {"group", "out", "op", "t_range"}
_FLOAT_LIST_FIELDS = {"times", "s"}
_STR_LIST_FIELDS = {"pairs", "checks"}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce(name: str, value: Any, source: str) -> Any:
    path = f"{source}.{name}"
    if name in _FLOAT_FIELDS:
        if not _is_number(value):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if name in _INT_FIELDS or (name in _OPTIONAL_INT_FIELDS and value is not None):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if name in _STR_FIELDS or (name in _OPTIONAL_STR_FIELDS and value is not None):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if name == "fit":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if name in _FLOAT_LIST_FIELDS:
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"{path}: expected a list of numbers")
        return [float(v) for v in value]
    if name in _STR_LIST_FIELDS:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{path}: expected a list of strings")
        return list(value)
    if name == "overrides":
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object of key: number")
        for key, v in value.items():
            if not _is_number(v):
                raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
        return {str(k): float(v) for k, v in value.items()}
    return value


def load_run_config(path: str) -> Dict[str, Any]:
    """Parse a JSON or YAML run config.

    Raises:
        ConfigError: Missing file or syntax error (with line number)
    """
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"run config not found: {file}")
    text = file.read_text(encoding="utf-8")
    try:
        if file.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file}: line {e.lineno} column {e.colno}: {e.msg}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{file}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{file}: top level must be an object")
    return data


def parse_pairs(spec: str) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """``"p,q;p~,q~"`` -> ((p, q), (p~, q~)); ``inf`` is accepted.

    Raises:
        ConfigError: Malformed specification
    """
    try:
        first, second = (part.split(",") for part in spec.split(";"))
        (p, q), (pt, qt) = (tuple(float(v) for v in first), tuple(float(v) for v in second))
    except ValueError as e:
        raise ConfigError(f"pairs: expected 'p,q;p~,q~', got {spec!r}") from e
    return (p, q), (pt, qt)


def parse_override(text: str) -> Tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--override: expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError as e:
        raise ConfigError(f"--override {key}: expected a number, got {value!r}") from e


def parse_t_range(text: str) -> np.ndarray:
    """``"a:b:steps"`` -> ``steps`` log-spaced times from a to b (0 < a <= b).

    Raises:
        ConfigError: Malformed range
    """
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError(text)
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise ConfigError(f"t_range: expected 'a:b:steps', got {text!r}") from e
    if not 0 < a <= b or steps < 1 or (steps == 1 and a != b):
        raise ConfigError(
            f"t_range: need 0 < a <= b and steps >= 1 (a = b for one step), got {text!r}"
        )
    return np.geomspace(a, b, steps)


def format_word(word: Sequence[int]) -> str:
    """Symbol 2i as the i-th lowercase letter, its inverse 2i+1 uppercase; ``e`` is the identity."""
    if not word:
        return "e"
    letters = (chr(ord("a") + k // 2) for k in word)
    return "".join(c.upper() if k % 2 else c for k, c in zip(word, letters))


def format_coverage(counts: Dict[str, int]) -> str:
    return ";".join(f"{name}:{counts[name]}" for name in sorted(counts))


def model_for(space: Space) -> Model:
    if space.is_complex_group and space.rank == 1:
        return Model.H3
    if space.n == 2 and space.rank == 1 and not space.is_complex_group:
        return Model.H2
    raise UnsupportedSpaceError(f"{space.label}: discrete groups are provided on H2 and H3 only")


def resolve_group(spec: Optional[str], model: Model) -> DiscreteGroup:
    """A group file path or a catalog label (default ``cyclic-1``)."""
    if spec is None:
        return group_from_name("cyclic-1", model)
    if spec.endswith(".json") or Path(spec).exists():
        group = load_group(spec)
        if group.model is not model:
            raise ConfigError(f"{spec}: group lives on {group.model.value}, not {model.value}")
        return group
    return group_from_name(spec, model)


class Lab:
    """Runs one subcommand with settings, outputs and the run ledger."""

    def __init__(self, config: RunConfig, settings: Optional[Settings] = None):
        """Initialize the runner.

        Args:
            config: Validated run configuration
            settings: Loaded settings (defaults when None)
        """
        self.config = config
        self.settings = settings if settings is not None else Settings()
        if config.seed is not None:
            self.settings.set("monte_carlo.seed", config.seed)
        self.out_dir = self._output_dir()
        self.ledger = RunLedgerDB(self.settings.ledger_path)

    def _output_dir(self) -> Path:
        out = self.config.out
        if out is None:
            return self.settings.output_dir / self.config.command
        path = Path(out)
        return path.parent if path.suffix else path

    def _target(self, name: str) -> Path:
        """``--out`` itself when it names a file of this kind, else ``name`` in the output dir."""
        out = self.config.out
        if out is not None and Path(out).suffix == Path(name).suffix:
            return Path(out)
        return self.out_dir / name

    def _times(self, default: Sequence[float]) -> np.ndarray:
        config = self.config
        if config.t_range is not None:
            if config.times:
                raise ConfigError("config: give either t_range or a list of times, not both")
            return parse_t_range(config.t_range)
        return np.asarray(config.times or default, dtype=float)

    def run(self) -> int:
        """Dispatch to the subcommand and record the run."""
        command = self.config.command
        run_id = self.ledger.start_run(command, asdict(self.config))
        logger.info(f"=== disperse-lab {command} ===")
        handler = getattr(self, f"cmd_{command.replace('-', '_')}")
        try:
            code = handler(run_id)
        except (ConfigError, DomainError, UnsupportedSpaceError, ClassViolationError) as e:
            logger.error(f"{command}: {e}")
            code = EXIT_USAGE
        except DisperseLabError as e:
            logger.error(f"{command}: {type(e).__name__}: {e}")
            code = EXIT_USAGE
        except OSError as e:
            logger.error(f"{command}: cannot write outputs: {e}")
            code = EXIT_USAGE
        except Exception as e:
            logger.error(f"Error during {command}: {e}", exc_info=True)
            code = EXIT_USAGE
        self.ledger.finish_run(run_id, code)
        logger.info(f"=== {command} finished with exit code {code} ===")
        return code

    # -- subcommands -----------------------------------------------------------

    def cmd_lie(self, run_id: int) -> int:
        spaces: List[Space] = list(catalog()) + [make_complex_group_space("SL", 3)]
        frame = pd.DataFrame(
            [
                {
                    "space": s.label,
                    "dim": s.n,
                    "rank": s.rank,
                    "rho_norm": rho_norm(s),
                    "rho_m": s.rho_m,
                    "complex_group": s.is_complex_group,
                    "class_s": class_s_note(s),
                }
                for s in spaces
            ]
        )
        write_table_csv(
            frame,
            self.out_dir / "lie.csv",
            ["root data in the geodesic normalization; rho_norm, rho_m dimensionless"],
        )
        print(frame.to_string(index=False))
        return EXIT_OK

    def cmd_kernel(self, run_id: int) -> int:
        config = self.config
        space = parse_space(config.space)
        if config.q <= 2:
            raise DomainError(f"kernel: q must exceed 2, got {config.q:g}")
        times = self._times([0.25, 1.0, 4.0])
        n_points = config.grid_n or self.settings.grid_points
        grid = make_grid(self.settings.grid_radius, n_points)
        norm_grid = lq_grid(config.q, config.grid_n) if config.grid_n else None
        numeric_only = not space.is_complex_group and space.n != 2
        profile = default_profile(space)

        rows, records = [], []
        for t in times:
            t = float(t)
            if numeric_only:
                kernel = schrodinger_kernel_numeric(space, t, grid, self.settings.epsilon_levels)
            else:
                kernel = schrodinger_kernel(space, t, grid)
            write_radial_csv(kernel, self.out_dir / f"kernel_t{t:g}.csv", {"t": t})
            rows.append(kernel.values)
            single = KernelGrid(space, np.array([t]), grid, kernel.values[np.newaxis, :])
            records.append(
                {
                    "t": t,
                    "Lq_norm": kernel_Lq_norm(space, t, config.q, norm_grid).value,
                    "fitted_c": verify_pointwise_bound(single, profile).constant,
                    "branch_coverage": format_coverage(branch_coverage(profile, [t], grid)),
                }
            )

        frame = pd.DataFrame(records, columns=["t", "Lq_norm", "fitted_c", "branch_coverage"])
        write_table_csv(
            frame,
            self._target("kernel.csv"),
            [
                f"{space.label}, q = {config.q:g}, {n_points} radial points; t in Laplacian units",
                "Lq_norm: ||s_t||_{L^q(X)} (dispersive estimate of the kernel)",
                f"fitted_c: max_r |s_t(r)| / (psi(t, r) e^{{-rho_m r}}); {profile.kind.value}",
                "branch_coverage: radial points per profile branch",
            ],
        )
        bound = verify_pointwise_bound(KernelGrid(space, times, grid, np.vstack(rows)), profile)
        summary = {
            "space": space.label,
            "times": times,
            "profile": profile.kind.value,
            "constant": bound.constant,
            "worst": {"t": bound.worst_t, "r": bound.worst_r},
            "branches": bound.branches,
        }
        write_json(summary, self.out_dir / "kernel.json")
        print(frame.to_string(index=False))
        print(f"{space.label}: pointwise constant c* = {bound.constant:.6g} ({profile.kind.value})")
        return EXIT_OK

    def cmd_group(self, run_id: int) -> int:
        model = model_for(parse_space(self.config.space))
        group = resolve_group(self.config.group, model)
        op = self.config.op
        if op is None:
            return self._group_summary(group)

        frame, header = getattr(self, f"_group_{op}")(group)
        write_table_csv(
            frame, self._target(f"group_{op}.csv"), [f"{group.label} on {model.value}", *header]
        )
        print(frame.to_string(index=False))
        return EXIT_OK

    def _group_orbit(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        radius = self.config.radius
        orbit = enumerate_orbit(group, radius=radius, budget=self.config.budget)
        if not orbit.complete:
            logger.warning(f"{group.label}: orbit truncated by the budget {self.config.budget}")
        frame = pd.DataFrame(
            {
                "word": [format_word(e.word) for e in orbit.entries],
                "distance": orbit.distances(),
            }
        )
        return frame, [
            f"orbit of the basepoint within radius {radius:g}; certificate {orbit.certificate}",
            "word: generators a, b, ... and inverses A, B, ...; distance: d(x, gamma x)",
        ]

    def _group_poincare(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        budget = self.config.budget
        frame = pd.DataFrame(
            [asdict(poincare_series(group, s, budget=budget)) for s in self.config.s]
        )
        return frame, ["partial_sum + tail_bound brackets sum_gamma e^{-s d(x, gamma x)}"]

    def _group_delta(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        exponent = critical_exponent_estimate(group, budget=self.config.budget)
        row = asdict(exponent)
        row["rho_m"] = group.space.rho_m
        row["class_gate"] = exponent.admits(group.space.rho_m)
        return pd.DataFrame([row]), [
            "estimate: slope of log #{gamma : d(x, gamma x) <= R} in R; ci: two sigma",
        ]

    def _group_growth(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        growth = growth_function(group, self.config.growth, self.config.budget)
        frame = pd.DataFrame({"k": range(len(growth.counts)), "count": growth.counts})
        return frame, [
            f"ball sizes in the word metric; complete {growth.complete}, "
            f"subexponential {growth.subexponential}",
        ]

    def _group_autokernel(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        records = []
        for t in self._times([1.0, 2.0, 4.0]):
            value = automorphic_kernel(group, float(t), budget=self.config.budget)
            records.append(
                {
                    "t": float(t),
                    "re": value.value.real,
                    "im": value.value.imag,
                    "tail_bound": value.tail_bound,
                    "terms": value.terms,
                    "radius": value.radius,
                    "epsilon": value.epsilon,
                }
            )
        return pd.DataFrame(records), [
            "re, im: sum_gamma s_t(d(x, gamma x)) at the basepoint; tail_bound: remainder",
        ]

    def _group_lqnorm(self, group: DiscreteGroup) -> Tuple[pd.DataFrame, List[str]]:
        config = self.config
        records = []
        for i, t in enumerate(self._times([1.0, 2.0, 4.0])):
            norm = quotient_Lq_norm(
                group,
                float(t),
                config.q,
                samples=config.samples,
                seed=self.settings.seed + i,
                budget=config.budget,
            )
            records.append(asdict(norm))
        return pd.DataFrame(records), [
            f"value: ||s_hat_t(x, .)||_{{L^{config.q:g}(M)}} by Monte Carlo; stderr: one sigma",
        ]

    def _group_summary(self, group: DiscreteGroup) -> int:
        exponent = critical_exponent_estimate(group, budget=self.config.budget)
        try:
            class_gate(group, exponent)
            admitted = True
        except ClassViolationError as e:
            logger.warning(str(e))
            admitted = False
        series = []
        for s in self.config.s:
            result = poincare_series(group, s)
            series.append(asdict(result))
        growth = growth_function(group, self.config.growth)
        summary = {
            "group": group.label,
            "kind": group.kind,
            "model": group.model.value,
            "critical_exponent": asdict(exponent),
            "class_gate": admitted,
            "poincare": series,
            "growth": asdict(growth),
        }
        write_json(summary, self.out_dir / "group.json")
        dump_group(group, self.out_dir / f"{group.label}.json")
        print(
            f"{group.label}: delta = {exponent.estimate:.4f} "
            f"[{exponent.ci_low:.4f}, {exponent.ci_high:.4f}], class gate {admitted}"
        )
        return EXIT_OK

    def cmd_dispersive(self, run_id: int) -> int:
        config = self.config
        space = parse_space(config.space)
        q = config.q
        times = self._times(np.geomspace(2.0, 50.0, 9))
        threads = self.settings.threads
        profile = global_profile(space)
        bound = np.array([profile_value(profile, float(t)) for t in times])
        lq = lq_decay_series(space, times, q, threads)
        aq = aq_decay_series(space, times, q, threads)
        summary: Dict[str, Any] = {
            "space": space.label,
            "q": q,
            "times": times,
            "lq_norms": lq,
            "aq_norms": aq,
        }

        measured, what = lq, f"||s_t||_{{L^{q:g}(X)}}"
        if config.group is not None:
            group = resolve_group(config.group, model_for(space))
            seed = self.settings.seed
            bounds = [
                opnorm_L1_to_Lq(group, float(t), q, samples=config.samples, seed=seed + 100 * i)
                for i, t in enumerate(times)
            ]
            summary["operator_norms"] = {
                "group": group.label,
                "bounds": [asdict(b) for b in bounds],
            }
            measured = np.array([b.upper for b in bounds])
            what = f"||S_t||_{{L^1 -> L^{q:g}}} on {group.label} \\ {space.label} (upper bound)"

        frame = pd.DataFrame(
            {
                "t": times,
                "bound": bound,
                "measured": measured,
                "ratio": profile_ratios(space, times, measured),
            }
        )
        write_table_csv(
            frame,
            self._target("dispersive.csv"),
            [
                f"{space.label}, q = {q:g}; t in time units of the Laplacian",
                "bound: Psi(t), the global dispersive profile",
                f"measured: {what}",
                "ratio: measured / bound (bounded in t certifies the dispersive estimate)",
            ],
        )
        plot = emit_plot(
            {"measured": (times, measured), "A_q": (times, aq)},
            self.out_dir / "dispersive.svg",
            ylabel=f"q = {q:g}",
            title=space.label,
            fit=config.fit,
        )
        if config.fit and plot.slope is not None:
            summary["fit"] = asdict(decay_fit(times, measured))
            summary["aq_fit"] = asdict(decay_fit(times, aq))
        elif config.fit:
            logger.warning(f"--fit needs at least 5 times, got {len(times)}")
        write_json(summary, self.out_dir / "dispersive.json")
        print(frame.to_string(index=False))
        if plot.slope is not None:
            print(f"{space.label}: log-log slope {plot.slope:.3f} +- {plot.stderr:.3f}")
        return EXIT_OK

    def cmd_nls(self, run_id: int) -> int:
        config = self.config
        space = parse_space(config.space)
        f = gaussian_bump(space, config.eps)
        run = duhamel_solve(space, f, config.gamma, config.T, config.dt)
        pairs = [parse_pairs(spec) for spec in config.pairs]
        report = strichartz_report(run, pairs)
        residuals: Dict[str, Any] = {}
        if not run.blowup_suspect:
            for t in sorted(run.scattering_checkpoints):
                res = scattering_residual(run, t)
                residuals[f"{t:g}"] = {"value": res.value, "tail": res.tail, "widened": res.widened}
        payload = {
            "run": run.to_dict(),
            "norms": {
                "times": run.times.tolist(),
                **{k: list(map(float, v)) for k, v in run.norms.items()},
            },
            "strichartz": report,
            "scattering_residuals": residuals,
        }
        write_json(payload, self._target("run.json"))
        y = report["ygamma"]
        print(f"Y_gamma = {y['total']:.4e} for |f| = {run.data_norm:.2e}")  # type: ignore[index]
        return EXIT_OK

    def cmd_verify_all(self, run_id: int) -> int:
        suite = AcceptanceSuite(self.settings, self.config.overrides)
        results = suite.run(self.config.checks or None)
        for r in results:
            self.ledger.save_check(run_id, r.name, r.value, r.threshold, r.passed, r.detail)
        write_summary(results, self.out_dir / "verify_all.csv")
        print(format_summary(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFICATION


def run(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Run one configured subcommand; 0 success, 1 usage error, 2 verification failure."""
    try:
        lab = Lab(config, settings)
    except (ConfigError, DomainError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    return lab.run()


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="disperse-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--settings", help="YAML settings file (default: config.yaml)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON or YAML run config (schema_version 1)")
        p.add_argument("--out", help="Output directory, or the file for the main table")
        p.add_argument("--seed", type=int)
        p.add_argument("--space", help="H2, H3, H4(C), SL(3,C), ...")

    common(sub.add_parser("lie", help="Root data of the catalog spaces"))

    def time_list(p: argparse.ArgumentParser) -> None:
        p.add_argument("--t-list", "--times", dest="times", type=float, nargs="+")

    p = sub.add_parser("kernel", help="Schroedinger kernels and the pointwise bound")
    common(p)
    time_list(p)
    p.add_argument("--q", type=float)
    p.add_argument("--grid-n", dest="grid_n", type=int, help="Radial grid points")

    p = sub.add_parser("group", help="Orbits, Poincare series, critical exponent, quotient norms")
    common(p)
    p.add_argument("--group", help="Group file or catalog label (cyclic-1, schottky-6-6)")
    p.add_argument("--op", choices=GROUP_OPS, help="Single operation (default: summary)")
    p.add_argument("--budget", type=int, help="Orbit enumeration budget")
    p.add_argument("--radius", type=float, help="Orbit radius for --op orbit")
    p.add_argument("--s", type=float, nargs="+")
    p.add_argument("--growth", type=int)
    time_list(p)
    p.add_argument("--q", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("dispersive", help="Decay of L^q norms against Psi(t), on X or on M")
    common(p)
    time_list(p)
    p.add_argument("--t-range", dest="t_range", help="a:b:steps, log-spaced")
    p.add_argument("--q", type=float)
    p.add_argument("--group")
    p.add_argument("--samples", type=int)
    p.add_argument("--fit", action="store_true", default=None, help="Fit the log-log slope")

    p = sub.add_parser("nls", help="Small-data NLS run with Strichartz and scattering report")
    common(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--pairs", action="append", help="'p,q;p~,q~' (repeatable)")

    p = sub.add_parser("verify-all", help="Run every acceptance check")
    common(p)
    p.add_argument("--override", action="append", default=[], help="key=value (repeatable)")
    p.add_argument("--checks", nargs="+")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Run config from an optional file with command-line flags on top."""
    data: Dict[str, Any] = {}
    if getattr(args, "config", None):
        data = load_run_config(args.config)
        source = str(args.config)
        if data.get("command", args.command) != args.command:
            raise ConfigError(
                f"{source}.command: {data['command']!r} does not match subcommand {args.command!r}"
            )
        RunConfig.from_mapping({**data, "command": args.command}, source)
    data["command"] = args.command
    data.setdefault("schema_version", SCHEMA_VERSION)

    known = {f.name for f in fields(RunConfig)}
    for name, value in vars(args).items():
        if name in known and name != "command" and value is not None:
            data[name] = value
    overrides = dict(data.get("overrides", {}))
    for text in getattr(args, "override", []) or []:
        key, value = parse_override(text)
        overrides[key] = value
    data["overrides"] = overrides
    return RunConfig.from_mapping(data, "config")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point."""
    try:
        args = build_parser().parse_args(argv)
        settings = Settings(args.settings)
    except ConfigError as e:
        setup_logger(level="INFO")
        logger.error(str(e))
        return EXIT_USAGE

    setup_logger(
        level=settings.log_level,
        log_file=settings.get("logging.file"),
        max_bytes=settings.get("logging.max_bytes", 10485760),
        backup_count=settings.get("logging.backup_count", 5),
    )
    try:
        config = config_from_args(args)
    except (ConfigError, DomainError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    return run(config, settings)


if __name__ == "__main__":
    sys.exit(main())
