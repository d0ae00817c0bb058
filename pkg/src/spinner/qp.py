"""Primal active-set solver for small dense box-constrained convex QPs.

    minimise  0.5 x'Hx + g'x   subject to  lo <= x <= hi

``H`` must be symmetric positive definite.
"""
import numpy as np

from ._jit import jit

QP_OPTIMAL = 0
QP_MAX_ITER = 1


@jit
def box_qp(H, g, lo, hi, x0, max_iter):
    """Returns ``(x, iterations, status)``; ``x`` always satisfies the bounds."""
    n = g.shape[0]
    x = np.empty(n)
    ws = np.zeros(n, dtype=np.int64)  # -1 at lower bound, +1 at upper, 0 free
    for i in range(n):
        x[i] = min(max(x0[i], lo[i]), hi[i])
        if x[i] <= lo[i]:
            x[i] = lo[i]
            ws[i] = -1
        elif x[i] >= hi[i]:
            x[i] = hi[i]
            ws[i] = 1
    scale = 1.0
    for i in range(n):
        scale = max(scale, abs(g[i]), abs(H[i, i]))
    tol = 1e-12 * scale

    for it in range(max_iter):
        grad = H @ x + g
        nfree = 0
        for i in range(n):
            if ws[i] == 0:
                nfree += 1
        step_small = True
        p = np.zeros(n)
        if nfree > 0:
            idx = np.empty(nfree, dtype=np.int64)
            j = 0
            for i in range(n):
                if ws[i] == 0:
                    idx[j] = i
                    j += 1
            Hff = np.empty((nfree, nfree))
            rhs = np.empty(nfree)
            for a in range(nfree):
                rhs[a] = -grad[idx[a]]
                for b in range(nfree):
                    Hff[a, b] = H[idx[a], idx[b]]
            pf = np.linalg.solve(Hff, rhs)
            for a in range(nfree):
                p[idx[a]] = pf[a]
                if abs(pf[a]) > 1e-14 * (1.0 + abs(x[idx[a]])):
                    step_small = False

        if step_small:
            # multipliers of the fixed bounds: release the most violated one
            worst = -1
            worst_val = tol
            for i in range(n):
                if ws[i] == -1 and -grad[i] > worst_val:
                    worst = i
                    worst_val = -grad[i]
                elif ws[i] == 1 and grad[i] > worst_val:
                    worst = i
                    worst_val = grad[i]
            if worst < 0:
                return x, it + 1, QP_OPTIMAL
            ws[worst] = 0
            continue

        alpha = 1.0
        block = -1
        for i in range(n):
            if ws[i] != 0:
                continue
            if p[i] < 0.0:
                a = (lo[i] - x[i]) / p[i]
            elif p[i] > 0.0:
                a = (hi[i] - x[i]) / p[i]
            else:
                continue
            if a < alpha:
                alpha = a
                block = i
        for i in range(n):
            if ws[i] == 0:
                x[i] += alpha * p[i]
        if block >= 0:
            if p[block] < 0.0:
                x[block] = lo[block]
                ws[block] = -1
            else:
                x[block] = hi[block]
                ws[block] = 1
        for i in range(n):
            x[i] = min(max(x[i], lo[i]), hi[i])
    return x, max_iter, QP_MAX_ITER


def solve_box_qp(H, g, lo, hi, x0=None, max_iter=None):
    H = np.ascontiguousarray(H, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("infeasible bounds: lo > hi")
    x0 = np.zeros_like(g) if x0 is None else np.ascontiguousarray(x0, dtype=float)
    max_iter = 10 * g.size + 10 if max_iter is None else int(max_iter)
    return box_qp(H, g, lo, hi, x0, max_iter)
