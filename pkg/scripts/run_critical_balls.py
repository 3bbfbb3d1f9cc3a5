"""Critical balls of the free problem with g = 3(|x|^2 - 1).

Radii solve 3 r^3 - 3 r + 1 = 0. The small root is unstable, the large one is
the converged limit of the descent. Also evaluates the instability
certificate on two small balls placed side by side.
"""

import numpy as np
from scipy.optimize import brentq

from anisoshape import MultiCurve, SolveConfig, circle, iso, minimize_unconstrained, quadratic, spectrum
from anisoshape.twopoint import component_instability, subsolution_certificate


def main() -> None:
    g = quadratic(3.0, b=-3.0)
    f = lambda r: 3 * r**3 - 3 * r + 1  # noqa: E731
    r_small, r_large = brentq(f, 0.2, 1 / np.sqrt(3)), brentq(f, 1 / np.sqrt(3), 1.0)
    print(f"roots: {r_small:.6f}, {r_large:.6f}")
    for n in (128, 256, 512):
        lam = [spectrum(MultiCurve((circle(r, n),)), iso(), g, "free", k=1).values[0] for r in (r_small, r_large)]
        print(f"n={n}: lambda_min small {lam[0]:+.4f} (exact {6 * r_small - 1 / r_small**2:+.4f}), "
              f"large {lam[1]:+.4f} (exact {6 * r_large - 1 / r_large**2:+.4f})")
    res = minimize_unconstrained(MultiCurve((circle(0.9, 256),)), iso(), g, SolveConfig(tol=1e-5))
    r = np.sqrt(np.sum(res.curve.loop_areas) / np.pi)
    print(f"descent from r=0.9: {res.termination} in {res.iterations} it, radius {r:.6f}")

    for D in (0.8, 1.2, 1.6, 2.0):
        balls = MultiCurve((circle(r_small, 256, (-D / 2, 0)), circle(r_small, 256, (D / 2, 0))))
        sub = subsolution_certificate(balls, iso(), g)
        comp = component_instability(balls, iso(), g)
        print(f"D={D}: Q(S)={sub.Q_S:+.4f}  I_omega={sub.I_omega:.4f}  margin={sub.margin:+.4f}  "
              f"flagged={comp.flagged}  ({sub.label})")


if __name__ == "__main__":
    main()
