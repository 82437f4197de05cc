"""Deterministic tiny-instance MILP fallback: dense simplex + branch and bound.

Only intended for blocks with a couple of dozen binaries; the main code
path uses the HiGHS backend. The simplex is a textbook two-phase dense
implementation with Bland's rule, which is slow but cycle-free and fully
reproducible.
"""

from __future__ import annotations

import numpy as np

_TOL = 1e-9
_INT_TOL = 1e-6
_BIG = 1e12


def _simplex(tableau: np.ndarray, basis: list[int], n_cols: int) -> str:
    """Minimize the objective row in-place; returns 'optimal' or 'unbounded'."""
    m = tableau.shape[0] - 1
    while True:
        # Bland's rule: first column with a negative reduced cost
        enter = -1
        for j in range(n_cols):
            if tableau[-1, j] < -_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal"
        ratios = []
        for i in range(m):
            a = tableau[i, enter]
            if a > _TOL:
                ratios.append((tableau[i, -1] / a, basis[i], i))
        if not ratios:
            return "unbounded"
        _, _, leave = min(ratios, key=lambda t: (t[0], t[1]))
        piv = tableau[leave, enter]
        tableau[leave, :] /= piv
        for i in range(tableau.shape[0]):
            if i != leave and abs(tableau[i, enter]) > _TOL:
                tableau[i, :] -= tableau[i, enter] * tableau[leave, :]
        basis[leave] = enter


def solve_lp(c, a_ub, b_ub, a_eq, b_eq, lb, ub):
    """Two-phase simplex for min c'x s.t. A_ub x <= b_ub, A_eq x = b_eq, lb<=x<=ub.

    Returns (status, x, objective). Infinite lower bounds are handled by a
    variable split; finite bounds by shifting and explicit upper rows.
    """
    n = len(c)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, n)
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float)
    b_eq = np.asarray(b_eq, dtype=float)

    # map each variable to nonnegative columns: x = lo + t (lb finite),
    # x = t+ - t- otherwise; finite ubs become extra <= rows
    col_of: list[tuple[int, int]] = []  # (positive col, negative col or -1)
    shift = np.zeros(n)
    n_pos = 0
    for j in range(n):
        if np.isfinite(lb[j]):
            shift[j] = lb[j]
            col_of.append((n_pos, -1))
            n_pos += 1
        else:
            col_of.append((n_pos, n_pos + 1))
            n_pos += 2
    extra_rows = []
    extra_rhs = []
    for j in range(n):
        if np.isfinite(ub[j]):
            row = np.zeros(n_pos)
            p, m = col_of[j]
            row[p] = 1.0
            if m >= 0:
                row[m] = -1.0
            extra_rows.append(row)
            extra_rhs.append(ub[j] - shift[j])

    def expand(mat):
        out = np.zeros((mat.shape[0], n_pos))
        for j in range(n):
            p, m = col_of[j]
            out[:, p] += mat[:, j]
            if m >= 0:
                out[:, m] -= mat[:, j]
        return out

    a_ub_x = expand(a_ub) if a_ub.size else np.zeros((0, n_pos))
    a_eq_x = expand(a_eq) if a_eq.size else np.zeros((0, n_pos))
    b_ub_x = b_ub - a_ub @ shift if a_ub.size else b_ub
    b_eq_x = b_eq - a_eq @ shift if a_eq.size else b_eq
    if extra_rows:
        a_ub_x = np.vstack([a_ub_x, np.array(extra_rows)])
        b_ub_x = np.concatenate([b_ub_x, np.array(extra_rhs)])
    c_x = np.zeros(n_pos)
    for j in range(n):
        p, m = col_of[j]
        c_x[p] += c[j]
        if m >= 0:
            c_x[m] -= c[j]
    obj_shift = float(c @ shift)

    n_ub = a_ub_x.shape[0]
    n_eq = a_eq_x.shape[0]
    m_rows = n_ub + n_eq
    if m_rows == 0:
        # bounds-only problem: pick the cheapest finite corner
        x_t = np.zeros(n_pos)
        for j in range(n):
            p, mneg = col_of[j]
            if c[j] < -_TOL:
                if not np.isfinite(ub[j]):
                    return "unbounded", None, None
                x_t[p] = ub[j] - shift[j]
            elif c[j] > _TOL and mneg >= 0:
                return "unbounded", None, None
        x = np.zeros(n)
        for j in range(n):
            p, mneg = col_of[j]
            x[j] = shift[j] + x_t[p] - (x_t[mneg] if mneg >= 0 else 0.0)
        return "optimal", x, float(c @ x)

    # standard form with slacks, artificials for phase 1
    a_full = np.zeros((m_rows, n_pos + n_ub))
    a_full[:n_ub, :n_pos] = a_ub_x
    a_full[:n_ub, n_pos:n_pos + n_ub] = np.eye(n_ub)
    a_full[n_ub:, :n_pos] = a_eq_x
    b_full = np.concatenate([b_ub_x, b_eq_x])
    neg = b_full < 0
    a_full[neg, :] *= -1
    b_full[neg] *= -1

    n_tot = n_pos + n_ub
    tableau = np.zeros((m_rows + 1, n_tot + m_rows + 1))
    tableau[:m_rows, :n_tot] = a_full
    tableau[:m_rows, n_tot:n_tot + m_rows] = np.eye(m_rows)
    tableau[:m_rows, -1] = b_full
    basis = list(range(n_tot, n_tot + m_rows))
    # phase 1 objective: sum of artificials
    tableau[-1, n_tot:n_tot + m_rows] = 1.0
    for i in range(m_rows):
        tableau[-1, :] -= tableau[i, :]
    if _simplex(tableau, basis, n_tot + m_rows) != "optimal":
        return "infeasible", None, None
    if tableau[-1, -1] < -1e-7:
        return "infeasible", None, None
    # drive leftover artificials out of the basis when possible
    for i in range(m_rows):
        if basis[i] >= n_tot:
            for j in range(n_tot):
                if abs(tableau[i, j]) > 1e-7:
                    piv = tableau[i, j]
                    tableau[i, :] /= piv
                    for k in range(m_rows + 1):
                        if k != i and abs(tableau[k, j]) > _TOL:
                            tableau[k, :] -= tableau[k, j] * tableau[i, :]
                    basis[i] = j
                    break

    # phase 2
    tableau[-1, :] = 0.0
    tableau[-1, :n_pos] = c_x
    tableau[:, n_tot:n_tot + m_rows] = 0.0  # retire artificial columns
    for i in range(m_rows):
        if basis[i] < n_tot and abs(tableau[-1, basis[i]]) > _TOL:
            tableau[-1, :] -= tableau[-1, basis[i]] * tableau[i, :]
    if _simplex(tableau, basis, n_tot) != "optimal":
        return "unbounded", None, None
    x_t = np.zeros(n_tot)
    for i in range(m_rows):
        if basis[i] < n_tot:
            x_t[basis[i]] = tableau[i, -1]
    x = np.zeros(n)
    for j in range(n):
        p, mneg = col_of[j]
        x[j] = shift[j] + x_t[p] - (x_t[mneg] if mneg >= 0 else 0.0)
    return "optimal", x, float(-tableau[-1, -1] + obj_shift)


def solve_milp(c, a, row_lb, row_ub, lb, ub, integrality):
    """Depth-first branch and bound over the LP relaxation.

    Rows come in interval form ``row_lb <= a x <= row_ub`` and are split
    into <=/== pieces for the simplex. Returns (status, x, obj, bound).
    """
    n = len(c)
    a = np.asarray(a, dtype=float).reshape(-1, n)
    a_ub_rows, b_ub_rows, a_eq_rows, b_eq_rows = [], [], [], []
    for i in range(a.shape[0]):
        lo, hi = row_lb[i], row_ub[i]
        if np.isfinite(lo) and np.isfinite(hi) and abs(hi - lo) < 1e-15:
            a_eq_rows.append(a[i])
            b_eq_rows.append(hi)
            continue
        if np.isfinite(hi):
            a_ub_rows.append(a[i])
            b_ub_rows.append(hi)
        if np.isfinite(lo):
            a_ub_rows.append(-a[i])
            b_ub_rows.append(-lo)
    a_ub = np.array(a_ub_rows) if a_ub_rows else np.zeros((0, n))
    b_ub = np.array(b_ub_rows) if b_ub_rows else np.zeros(0)
    a_eq = np.array(a_eq_rows) if a_eq_rows else np.zeros((0, n))
    b_eq = np.array(b_eq_rows) if b_eq_rows else np.zeros(0)
    int_idx = [j for j in range(n) if integrality[j]]

    best = {"x": None, "obj": np.inf}
    root_bound = {"value": None}

    def recurse(lb_cur, ub_cur, depth):
        status, x, obj = solve_lp(c, a_ub, b_ub, a_eq, b_eq, lb_cur, ub_cur)
        if depth == 0:
            root_bound["value"] = obj if status == "optimal" else None
            if status == "unbounded":
                best["status"] = "unbounded"
                return
        if status != "optimal" or obj >= best["obj"] - 1e-9:
            return
        frac_j, frac_d = -1, -1.0
        for j in int_idx:
            d = abs(x[j] - round(x[j]))
            if d > _INT_TOL and d > frac_d + 1e-12:
                frac_j, frac_d = j, d
        if frac_j < 0:
            xr = x.copy()
            for j in int_idx:
                xr[j] = round(xr[j])
            if obj < best["obj"] - 1e-12:
                best["x"], best["obj"] = xr, obj
            return
        floor = np.floor(x[frac_j] + _INT_TOL)
        for lo_v, hi_v in ((floor, floor), (floor + 1, floor + 1)):
            lb_n, ub_n = lb_cur.copy(), ub_cur.copy()
            lb_n[frac_j] = max(lb_n[frac_j], lo_v)
            ub_n[frac_j] = min(ub_n[frac_j], hi_v)
            if lb_n[frac_j] <= ub_n[frac_j]:
                recurse(lb_n, ub_n, depth + 1)

    best["status"] = None
    recurse(np.asarray(lb, dtype=float), np.asarray(ub, dtype=float), 0)
    if best.get("status") == "unbounded":
        return "unbounded", None, None, None
    if best["x"] is None:
        return "infeasible", None, None, None
    # the search is exhaustive, so the incumbent is proven optimal
    return "optimal", best["x"], best["obj"], best["obj"]
