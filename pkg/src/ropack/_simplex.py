"""Dense primal simplex kernel for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The slack basis is feasible for such problems, so no phase one is needed.
Pivoting uses Bland's rule (lowest-index entering column, lowest-index
leaving basic variable among ratio ties), which cannot cycle and makes the
returned vertex a deterministic function of the input arrays.  The final
row prices are returned as well, so callers can form a dual bound.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
ITERATION_LIMIT = 1
UNBOUNDED = 2

PIVOT_TOL = 1e-11
COST_TOL = 1e-11


@njit(cache=True)
def solve_packing_lp(A, b, c, max_iter):
    rows, cols = A.shape
    width = cols + rows + 1
    T = np.zeros((rows + 1, width))
    for r in range(rows):
        for k in range(cols):
            T[r, k] = A[r, k]
        T[r, cols + r] = 1.0
        T[r, width - 1] = b[r]
    for k in range(cols):
        T[rows, k] = -c[k]
    basis = np.empty(rows, dtype=np.int64)
    for r in range(rows):
        basis[r] = cols + r

    status = ITERATION_LIMIT
    for _ in range(max_iter):
        enter = -1
        for k in range(width - 1):
            if T[rows, k] < -COST_TOL:
                enter = k
                break
        if enter < 0:
            status = OPTIMAL
            break
        leave = -1
        best = 0.0
        for r in range(rows):
            a = T[r, enter]
            if a > PIVOT_TOL:
                ratio = T[r, width - 1] / a
                if leave < 0 or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave = r
                    best = ratio
        if leave < 0:
            status = UNBOUNDED
            break
        piv = T[leave, enter]
        for k in range(width):
            T[leave, k] /= piv
        T[leave, enter] = 1.0
        for r in range(rows + 1):
            if r != leave:
                f = T[r, enter]
                if f != 0.0:
                    for k in range(width):
                        T[r, k] -= f * T[leave, k]
                    T[r, enter] = 0.0
        basis[leave] = enter

    x = np.zeros(cols)
    for r in range(rows):
        if basis[r] < cols:
            v = T[r, width - 1]
            x[basis[r]] = v if v > 0.0 else 0.0
    # row prices: reduced costs of the slack columns
    y = np.empty(rows)
    for r in range(rows):
        y[r] = T[rows, cols + r]
    return status, x, y


@njit(cache=True)
def within_tolerance(A, b, x, feas_tol, shrink_tol):
    """Check ``A x <= b`` up to ``feas_tol``, shrinking ``x`` in place if needed.

    Rounding in the tableau can leave a vertex a hair outside the polytope.
    If a uniform factor ``s >= 1 - shrink_tol`` brings every row back under
    its capacity, ``x`` is scaled by ``s`` (the objective moves by the same
    relative amount).  Larger violations are reported, not repaired.
    """
    rows, cols = A.shape
    load = np.zeros(rows)
    for r in range(rows):
        for k in range(cols):
            load[r] += A[r, k] * x[k]
    ok = True
    s = 1.0
    for r in range(rows):
        if load[r] - b[r] > feas_tol * max(1.0, b[r]):
            ok = False
            s = min(s, b[r] / load[r])
    if ok:
        return True
    if s < 1.0 - shrink_tol:
        return False
    for k in range(cols):
        x[k] *= s
    for r in range(rows):
        t = 0.0
        for k in range(cols):
            t += A[r, k] * x[k]
        if t - b[r] > feas_tol * max(1.0, b[r]):
            return False
    return True


@njit(cache=True)
def solve_items_lp(A_all, caps, c_all, opt_items, has_opt, keep, max_iter, feas_tol, shrink_tol):
    """Solve the LP restricted to the items flagged in ``keep``.

    ``A_all`` holds the capacity rows followed by one row per item that has
    an option (in item order), with one column per option.  The sub-LP
    keeps the capacity rows, the rows of kept items and their columns, in
    the original order, so it is the same LP ``A_all`` would give if built
    for the kept items alone.  Returns ``(status, columns, x, feasible)``
    where ``x`` is clamped to ``[0, 1]`` and checked by :func:`within_tolerance`.
    """
    md = caps.shape[0]
    ncols = opt_items.shape[0]
    n = keep.shape[0]
    rows = np.empty(md + n, dtype=np.int64)
    nr = 0
    for r in range(md):
        rows[nr] = r
        nr += 1
    item_row = md
    for i in range(n):
        if has_opt[i]:
            if keep[i]:
                rows[nr] = item_row
                nr += 1
            item_row += 1
    cols = np.empty(ncols, dtype=np.int64)
    nc = 0
    for k in range(ncols):
        if keep[opt_items[k]]:
            cols[nc] = k
            nc += 1
    cols = cols[:nc]
    A = np.empty((nr, nc))
    b = np.empty(nr)
    for r in range(nr):
        src = rows[r]
        for k in range(nc):
            A[r, k] = A_all[src, cols[k]]
        b[r] = caps[src] if src < md else 1.0
    c = np.empty(nc)
    for k in range(nc):
        c[k] = c_all[cols[k]]
    if nc == 0:
        return OPTIMAL, cols, np.zeros(0), True
    status, x, _ = solve_packing_lp(A, b, c, max_iter)
    for k in range(nc):
        if x[k] > 1.0:
            x[k] = 1.0
    feasible = within_tolerance(A, b, x, feas_tol, shrink_tol)
    return status, cols, x, feasible
