#!/usr/bin/env python3
"""Generate the spherical quadrature point sets shipped in ambidec/data/grids.

Each set is refined with damped Gauss-Newton steps on the spherical-harmonic
moment residuals

    r_i = sum_j w_j * Y_i(u_j) - 4*pi*[i == (0,0)]

until every moment up to the target degree vanishes to ~1e-12, which makes the
set an exact quadrature (a spherical design when the weights are equal).
Positions start from a Fibonacci spiral.  Two modes:

* equal   - weights fixed at 4*pi/N, only positions move (true t-design);
* weighted - positions and weights move (used where N is too small for an
  equal-weight design of the target degree, e.g. 240 points at degree 21).

Run from the repository root:  python tools/generate_grids.py
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ambidec.grids import FOUR_PI, SphericalGrid, fibonacci_grid, save_grid
from ambidec.spherical import ChannelSpec, sh_matrix


def full_channels(degree: int, include_dc: bool):
    first = 0 if include_dc else 1
    return [
        ChannelSpec.from_degree_order(l, m)
        for l in range(first, degree + 1)
        for m in range(-l, l + 1)
    ]


def moment_residuals(channels, az, el, w, include_dc: bool) -> np.ndarray:
    y = sh_matrix(channels, az, el)
    r = y @ w
    if include_dc:
        r[0] -= FOUR_PI
    return r


def moment_jacobian(channels, az, el, w, weighted: bool, h: float = 1e-6) -> np.ndarray:
    n = az.size
    cols = [
        (sh_matrix(channels, az + h, el) - sh_matrix(channels, az - h, el)) * (w / (2 * h)),
        (sh_matrix(channels, az, el + h) - sh_matrix(channels, az, el - h)) * (w / (2 * h)),
    ]
    if weighted:
        # w_j = s_j^2, d r_i / d s_j = 2 s_j Y_i(u_j)
        cols.append(sh_matrix(channels, az, el) * (2.0 * np.sqrt(w)))
    return np.hstack(cols)


def refine(n_points: int, degree: int, weighted: bool, max_iter: int = 300,
           tol: float = 1e-12, seed_grid=None, verbose: bool = True):
    grid = seed_grid or fibonacci_grid(n_points)
    az = grid.azimuths.copy()
    el = grid.elevations.copy()
    w = grid.weights.copy()
    channels = full_channels(degree, include_dc=weighted)

    mu = 1e-8
    r = moment_residuals(channels, az, el, w, weighted)
    cost = float(np.max(np.abs(r)))
    start = time.time()
    for it in range(max_iter):
        if cost < tol:
            break
        jac = moment_jacobian(channels, az, el, w, weighted)
        gram = jac @ jac.T
        accepted = False
        for _ in range(60):
            try:
                lam = np.linalg.solve(gram + mu * np.eye(gram.shape[0]), r)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            step = -jac.T @ lam
            az_new = az + step[:n_points]
            el_new = np.clip(el + step[n_points : 2 * n_points], -math.pi / 2, math.pi / 2)
            if weighted:
                s_new = np.sqrt(w) + step[2 * n_points :]
                w_new = s_new * s_new
            else:
                w_new = w
            r_new = moment_residuals(channels, az_new, el_new, w_new, weighted)
            cost_new = float(np.max(np.abs(r_new)))
            if cost_new < cost:
                az, el, w, r, cost = az_new, el_new, w_new, r_new, cost_new
                mu = max(mu / 4.0, 1e-14)
                accepted = True
                break
            mu *= 10.0
        if verbose and (it % 5 == 0 or cost < tol):
            print(f"  iter {it:3d}  max|moment| = {cost:.3e}  mu={mu:.1e}  "
                  f"[{time.time() - start:.1f}s]")
        if not accepted:
            print("  no further progress")
            break
    ce = np.cos(el)
    vecs = np.column_stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)])
    # renormalize the tiny weight-sum slack into the weights
    w = w * (FOUR_PI / np.sum(w))
    return SphericalGrid.from_unit_vectors(f"gen{n_points}", vecs, w, t_degree=degree), cost


def orthonormality_residual(grid: SphericalGrid, degree: int) -> float:
    """Max |sum_j w_j Y_i Y_k - 4*pi*delta_ik| over pairs with l_i + l_k <= degree."""
    channels = full_channels(degree, include_dc=True)
    y = sh_matrix(channels, grid.azimuths, grid.elevations)
    gram = (y * grid.weights) @ y.T
    gram -= FOUR_PI * np.eye(len(channels))
    degs = np.array([c.degree for c in channels])
    mask = degs[:, None] + degs[None, :] <= degree
    return float(np.max(np.abs(np.where(mask, gram, 0.0))))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()
    out_dir = Path(args.out_dir) if args.out_dir else (
        Path(__file__).resolve().parents[1] / "src" / "ambidec" / "data" / "grids"
    )
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [
        ("design48_d7.txt", 48, 7, False),
        ("design240_d21.txt", 240, 21, True),
        ("design5200_d21.txt", 5200, 21, False),
    ]
    for fname, n, degree, weighted in jobs:
        mode = "weighted" if weighted else "equal-weight"
        print(f"{fname}: {n} points, degree {degree}, {mode}")
        grid, cost = refine(n, degree, weighted)
        resid = orthonormality_residual(grid, degree)
        print(f"  final max|moment| = {cost:.3e}, orthonormality residual = {resid:.3e}")
        if resid > 1e-9:
            raise SystemExit(f"{fname}: residual {resid:.3e} too large, not shipping")
        save_grid(
            grid,
            out_dir / fname,
            comment=f"{n}-point degree-{degree} quadrature ({mode}), "
            "Gauss-Newton refined moments, generated by tools/generate_grids.py",
        )
        print(f"  wrote {out_dir / fname}")


if __name__ == "__main__":
    main()
