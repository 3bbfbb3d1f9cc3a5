"""Minimising-movements trajectories for a circle and for a Wulff shape.

The circle radius is compared with sqrt(R^2 - 2t), the Wulff shape with its
best-fitting scaled copy.
"""

import argparse

import numpy as np
from scipy.optimize import minimize_scalar

from anisoshape import MultiCurve, atw_step, circle, elliptic, iso, wulff_shape
from anisoshape.curve2d import point_segment_distance


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    one = lambda p, q: point_segment_distance(p, q, np.roll(q, -1, axis=0))[0].min(axis=1).max()  # noqa: E731
    return float(max(one(a, b), one(b, a)))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=float, default=1e-3)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--n", type=int, default=256)
    args = ap.parse_args()

    curve = MultiCurve((circle(2.0, args.n),))
    for k in range(1, args.steps + 1):
        curve = atw_step(curve, iso(), args.tau)
        if k % 10 == 0:
            r = np.sqrt(np.sum(curve.loop_areas) / np.pi)
            print(f"circle step {k}: radius {r:.6f}, exact {np.sqrt(4 - 2 * k * args.tau):.6f}")

    aniso = elliptic(2.0, 1.0)
    template = wulff_shape(aniso, 1024).loops[0]
    shape, scale = wulff_shape(aniso, args.n), 1.0
    for k in range(1, args.steps + 1):
        shape = atw_step(shape, aniso, args.tau)
        fit = minimize_scalar(lambda s: hausdorff(shape.loops[0], s * template),
                              bounds=(0.5 * scale, 1.5 * scale), method="bounded")
        scale = fit.x
        if k % 10 == 0:
            print(f"wulff step {k}: best scale {scale:.5f}, Hausdorff {fit.fun:.4f}")


if __name__ == "__main__":
    main()
