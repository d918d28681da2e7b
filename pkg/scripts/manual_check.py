"""Manual one-time check of the H3 closed forms and the small-data flow."""

import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from disperse_lab.analysis.kernels import heat_kernel_exact, schrodinger_kernel  # noqa: E402
from disperse_lab.evolution.schrodinger_flow import (  # noqa: E402
    default_flow,
    duhamel_solve,
    gaussian_bump,
)
from disperse_lab.evolution.strichartz import scattering_residual  # noqa: E402
from disperse_lab.geometry.lie_data import make_complex_group_space  # noqa: E402
from disperse_lab.geometry.spherical import (  # noqa: E402
    heat_multiplier,
    inverse_transform,
    make_grid,
)
from disperse_lab.utils.logger import setup_logger  # noqa: E402


def main():
    """Run manual check."""
    setup_logger(level="INFO")
    space = make_complex_group_space("SL", 2)

    print("\n" + "=" * 60)
    print(f"disperse-lab manual check on {space.label}")
    print("=" * 60 + "\n")

    # Closed-form kernels
    print("Evaluating kernels...")
    s1 = schrodinger_kernel(space, 1.0, np.array([0.0, 1.0]))
    print("\n📐 Schroedinger kernel:")
    print(f"   |s_1(1)| = {abs(s1.values[1]):.6f} (closed form 0.019102)")

    grid = make_grid()
    numeric = inverse_transform(space, heat_multiplier(space, 1.0), grid)
    exact = heat_kernel_exact(space, 1.0, grid)
    window = (grid >= 0.1) & (grid <= 8.0)
    scale = np.abs(exact[window]) + 1e-6 * np.max(np.abs(exact[window]))
    error = float(np.max(np.abs(numeric.values.real[window] - exact[window]) / scale))
    print("\n🔥 Heat kernel h_1:")
    print(f"   inverse transform vs closed form, max relative error {error:.2e}")
    if error <= 1e-8:
        print("   ✅ Inverse transform matches")
    else:
        print("   ❌ Inverse transform off")

    # Small-data NLS
    print("\n🌊 Small-data NLS (gamma = 2, T = 20):")
    flow = default_flow()
    run = duhamel_solve(space, gaussian_bump(space, 1e-2, flow=flow), 2.0, 20.0, flow=flow)
    if run.blowup_suspect:
        print("   ❌ Fixed point did not contract")
        return
    y = run.ygamma_norm()
    residual = scattering_residual(run, 10.0)
    print(f"   |f|_2 = {run.data_norm:.3e}")
    print(f"   Y_gamma = {y.total:.3e} ({y.total / run.data_norm:.3f} |f|_2)")
    print(f"   scattering residual at t = 10: {residual.upper:.2e}")
    if residual.upper <= 1e-3 * run.data_norm:
        print("   ✅ Scatters within tolerance")
    else:
        print("   ⚠️  Residual above 1e-3 |f|_2")

    print("\n" + "=" * 60 + "\n")


if __name__ == "__main__":
    main()
