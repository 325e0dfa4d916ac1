"""Independent oracles used by the test suite.

Everything here deliberately avoids the library's own computational paths:
caps come from exhaustive enumeration, feasibility from brute-force grids,
and derivatives from central finite differences.
"""

from itertools import permutations

import numpy as np

TWO_PI = 2.0 * np.pi


def ordering_cap(items, pairs):
    """Max number of (winner, loser) pairs a strict ranking can satisfy.

    Enumerates all |items|! orderings; a pair is satisfied when the winner
    ranks strictly above the loser.
    """
    items = list(items)
    best = 0
    for order in permutations(items):
        rank = {it: k for k, it in enumerate(order)}
        best = max(best, sum(1 for w, l in pairs if rank[w] < rank[l]))
    return best


def d1_grid_max_min(angles, grid=62832, refine=True):
    """Brute-force max over dominant angles of min_i sin(theta_i - delta).

    Grid resolution ~1e-4 over [0, 2*pi), with one local refinement pass.
    """
    theta = np.asarray(angles, dtype=float)
    deltas = np.arange(grid) * (TWO_PI / grid)
    vals = np.sin(theta[None, :] - deltas[:, None]).min(axis=1)
    k = int(np.argmax(vals))
    best_delta, best = float(deltas[k]), float(vals[k])
    if refine:
        step = TWO_PI / grid
        fine = np.linspace(best_delta - step, best_delta + step, 4001)
        fvals = np.sin(theta[None, :] - fine[:, None]).min(axis=1)
        kf = int(np.argmax(fvals))
        if fvals[kf] > best:
            best_delta, best = float(fine[kf]), float(fvals[kf])
    return best, best_delta


def dominant_cycle_d1_grid_cap(steps=360, tol=1e-9):
    """Max satisfiable strict signs of the dominant+3-cycle pattern at d=1.

    Exhaustive over a ``steps``-point angle grid (1 degree at the default)
    for items B, C, D with A pinned at angle 0 (rotation invariance); zero
    magnitudes only forfeit constraints, so unit magnitudes are WLOG for
    sign counting.  Pattern: A>B, B>C, C>A, D>A, D>B, D>C with
    s(i, j) = sin(phi_j - phi_i).
    """
    phis = np.arange(steps) * (TWO_PI / steps)
    best = 0
    sin_c = np.sin(phis)          # depends on phi_C
    d_a = np.sin(-phis) > tol     # D>A: sin(0 - phi_D) > 0, per phi_D
    for phi_b in phis:
        c1 = np.sin(phi_b) > tol                        # A>B: sin(phi_B - 0)
        c2 = np.sin(phis - phi_b) > tol                 # B>C per phi_C
        c3 = (-sin_c) > tol                             # C>A: sin(-phi_C)
        d_b = np.sin(phi_b - phis) > tol                # D>B per phi_D
        d_c = np.sin(phis[:, None] - phis[None, :]) > tol  # (phi_C, phi_D)
        count = (int(c1)
                 + c2.astype(np.int64)[:, None]
                 + c3.astype(np.int64)[:, None]
                 + d_a.astype(np.int64)[None, :]
                 + d_b.astype(np.int64)[None, :]
                 + d_c.astype(np.int64))
        best = max(best, int(count.max()))
        if best == 6:
            return best
    return best


def fd_gradients(loss_fn, arrays, step=1e-6):
    """Central finite differences of ``loss_fn()`` w.r.t. each array entry.

    ``arrays`` maps names to numpy arrays mutated in place; returns a dict
    of same-shape gradient arrays.
    """
    out = {}
    for name, arr in arrays.items():
        grad = np.zeros_like(arr, dtype=float)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss_fn()
            flat[i] = orig - step
            lm = loss_fn()
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * step)
        out[name] = grad
    return out


def relative_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
