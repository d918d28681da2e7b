"""CSV, JSON and SVG artifact writers."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from disperse_lab.analysis.dispersive import decay_fit
from disperse_lab.geometry.lie_data import Space, parse_space
from disperse_lab.geometry.spherical import RadialFunction
from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
SVG_HASHSALT = "disperse-lab"
_SIDECAR_KEYS = ("truncation", "epsilon_ladder")
MINUS = "−"

PathLike = Union[str, Path]
Series = Tuple[Sequence[float], Sequence[float]]


@dataclass
class PlotResult:
    path: Path
    slope: Optional[float]
    stderr: Optional[float]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_commented(path: Path, header: Sequence[str], frame: pd.DataFrame) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def write_radial_csv(
    f: RadialFunction, path: PathLike, extra: Optional[Dict[str, Any]] = None
) -> Path:
    """Write r, Re f, Im f with a JSON sidecar describing the grid and the computation.

    Args:
        f: Radial function to write
        path: CSV destination
        extra: Additional sidecar fields

    Returns:
        Path of the CSV file
    """
    path = _prepare(path)
    frame = pd.DataFrame({"r": f.grid, "re": f.values.real, "im": f.values.imag})
    header = [
        f"radial function on {f.space.label}",
        "r: geodesic distance to the origin; re, im: real and imaginary parts",
    ]
    _write_commented(path, header, frame)

    sidecar = {
        "space": f.space.label,
        "grid": {"points": int(f.grid.size), "r_max": float(f.grid[-1])},
        "singular_at_origin": f.singular_at_origin,
        "truncation": f.metadata.get("truncation"),
        "epsilon_ladder": f.metadata.get("epsilon_ladder"),
        "metadata": {k: v for k, v in f.metadata.items() if k not in _SIDECAR_KEYS},
    }
    if extra:
        sidecar.update(extra)
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)

    logger.debug(f"Wrote {f.grid.size} radial samples to {path}")
    return path


def read_radial_csv(path: PathLike, space: Optional[Space] = None) -> RadialFunction:
    """Read a radial CSV; the space comes from the sidecar unless given.

    Raises:
        DomainError: No space given and no sidecar present
    """
    path = Path(path)
    frame = pd.read_csv(path, comment="#")
    meta: Dict[str, Any] = {}
    side = sidecar_path(path)
    if side.exists():
        with open(side, encoding="utf-8") as fh:
            meta = json.load(fh)
    if space is None:
        if "space" not in meta:
            raise DomainError(f"{path}: no sidecar with a space label, pass space explicitly")
        space = parse_space(meta["space"])
    values = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    metadata = dict(meta.get("metadata", {}))
    for key in _SIDECAR_KEYS:
        if meta.get(key) is not None:
            metadata[key] = meta[key]
    return RadialFunction(
        frame["r"].to_numpy(),
        values,
        space,
        bool(meta.get("singular_at_origin", False)),
        metadata,
    )


def write_table_csv(frame: pd.DataFrame, path: PathLike, header: Sequence[str] = ()) -> Path:
    """Write a table preceded by ``#`` lines naming units and what each column certifies."""
    path = _prepare(path)
    _write_commented(path, header, frame)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(payload: Mapping[str, Any], path: PathLike) -> Path:
    path = _prepare(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def slope_label(slope: float) -> str:
    """``-1.5`` -> ``"−1.50"``."""
    return f"{slope:.2f}".replace("-", MINUS)


def emit_plot(
    series: Union[Series, Mapping[str, Series]],
    path: PathLike,
    xlabel: str = "t",
    ylabel: str = "norm",
    title: str = "",
    fit: bool = True,
) -> PlotResult:
    """Log-log SVG of one or more series with the slope of the first annotated.

    Fewer than five points, or fit=False, are plotted without a fit. Output
    bytes depend only on the input.

    Raises:
        DomainError: Empty series
        OSError: Unwritable path
    """
    named: Mapping[str, Series] = series if isinstance(series, Mapping) else {"": series}
    if not named or any(len(xs) == 0 for xs, _ in named.values()):
        raise DomainError("emit_plot needs a nonempty series")
    path = Path(path)

    first_x, first_y = next(iter(named.values()))
    slope: Optional[float] = None
    stderr: Optional[float] = None
    intercept = 0.0
    if fit and len(first_x) >= 5:
        result = decay_fit(first_x, first_y)
        slope, stderr, intercept = result.slope, result.stderr, result.intercept
    elif fit:
        logger.info(f"{path.name}: {len(first_x)} point(s), plotting without a fit")

    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig = Figure(figsize=(6, 4.5))
        FigureCanvasAgg(fig)
        ax = fig.subplots()
        for name, (xs, ys) in named.items():
            style = "o-" if len(xs) > 1 else "o"
            ax.loglog(np.abs(np.asarray(xs, dtype=float)), ys, style, ms=3, label=name or None)
        if slope is not None:
            t = np.abs(np.asarray(first_x, dtype=float))
            ax.loglog(t, np.exp(intercept) * t**slope, "--", color="gray")
            ax.text(
                0.05,
                0.05,
                f"slope {slope_label(slope)}",
                transform=ax.transAxes,
            )
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if any(named.keys()):
            ax.legend()
        fig.tight_layout()
        fig.savefig(_prepare(path), format="svg", metadata={"Date": None})

    logger.debug(f"Wrote plot {path}")
    return PlotResult(path, slope, stderr)
