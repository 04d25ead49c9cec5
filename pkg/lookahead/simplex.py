"""Small dense linear programs.

All problems are of the form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

The default backend is a two-phase primal simplex on a dense tableau
using Bland's rule, so it terminates on degenerate problems.
``solver="highs"`` delegates to :func:`scipy.optimize.linprog`.
Marginals follow the scipy convention: the sensitivity of the optimal
objective to the right-hand sides.
"""
import logging
import typing as t

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .utils import ValueObject, frozen

__all__ = ["LPResult", "solve_lp", "SOLVERS"]

logger = logging.getLogger(__name__)

SOLVERS = ("simplex", "highs")

_HIGHS_STATUS = {
    0: "optimal",
    1: "iteration_limit",
    2: "infeasible",
    3: "unbounded",
    4: "numerical",
}


class LPResult(ValueObject):
    __fields__ = [
        ("x", t.Optional[np.ndarray], "Optimal point, None unless optimal"),
        ("fun", float, "Optimal objective value (nan unless optimal)"),
        ("status", str, "optimal|infeasible|unbounded|iteration_limit"),
        ("ineq_marginals", np.ndarray, "Marginals of the <= rows"),
        ("eq_marginals", np.ndarray, "Marginals of the == rows"),
        ("iterations", int, "Number of pivots (or solver iterations)"),
        ("solver", str, "Backend used"),
    ]

    @property
    def optimal(self):
        return self.status == "optimal"


def _as_rows(A, b, n):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    return np.atleast_2d(np.asarray(A, dtype=float)), np.asarray(
        b, dtype=float
    )


class _Tableau:
    """Tableau ``[A | b]`` with an explicit basis, one row per constraint"""

    def __init__(self, table, basis, tol):
        self.table = table
        self.basis = basis
        self.tol = tol
        self.pivots = 0

    def pivot(self, row, col):
        T = self.table
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        rhs = T[:, -1]
        rhs[(rhs < 0) & (rhs > -self.tol)] = 0.0
        self.basis[row] = col
        self.pivots += 1

    def run(self, cost, max_iter):
        # type: (np.ndarray, int) -> str
        """Minimize ``cost @ x`` from the current basic feasible point"""
        T = self.table
        for _ in range(max_iter):
            reduced = cost - cost[self.basis] @ T[:, :-1]
            entering = np.flatnonzero(reduced < -self.tol)
            if not entering.size:
                return "optimal"
            col = entering[0]
            column = T[:, col]
            rows = np.flatnonzero(column > self.tol)
            if not rows.size:
                return "unbounded"
            ratios = T[rows, -1] / column[rows]
            tied = rows[ratios <= ratios.min() + self.tol]
            # Bland: among tied rows, leave with the lowest basic index
            row = tied[np.argmin(self.basis[tied])]
            self.pivot(row, col)
        return "iteration_limit"


def _failed(status, n, m_ub, m_eq, iterations, solver):
    return LPResult(
        None,
        float("nan"),
        status,
        np.zeros(m_ub),
        np.zeros(m_eq),
        iterations,
        solver,
    )


def _solve_simplex(c, A_ub, b_ub, A_eq, b_eq, max_iter, tol):
    n = c.size
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    A = np.block([[A_ub, np.eye(m_ub)], [A_eq, np.zeros((m_eq, m_ub))]])
    b = np.concatenate([b_ub, b_eq])
    flipped = b < 0
    A[flipped] *= -1
    b[flipped] *= -1

    # slacks of untouched <= rows start basic, all others get artificials
    slack_basic = np.zeros(m, dtype=bool)
    slack_basic[:m_ub] = ~flipped[:m_ub]
    needs_art = np.flatnonzero(~slack_basic)
    width = n + m_ub
    art = np.zeros((m, needs_art.size))
    art[needs_art, np.arange(needs_art.size)] = 1.0
    table = np.hstack([A, art, b[:, None]])
    basis = np.empty(m, dtype=int)
    basis[slack_basic] = n + np.flatnonzero(slack_basic)
    basis[needs_art] = width + np.arange(needs_art.size)
    tab = _Tableau(table, basis, tol)

    kept = np.arange(m)
    if needs_art.size:
        phase_one = np.zeros(width + needs_art.size)
        phase_one[width:] = 1.0
        status = tab.run(phase_one, max_iter)
        infeasibility = phase_one[tab.basis] @ tab.table[:, -1]
        if status != "optimal" or infeasibility > tol * max(1.0, b.max()):
            logger.debug("phase one ended with %s", infeasibility)
            return _failed(
                "infeasible", n, m_ub, m_eq, tab.pivots, "simplex"
            )
        redundant = []
        for row in np.flatnonzero(tab.basis >= width):
            candidates = np.flatnonzero(np.abs(tab.table[row, :width]) > tol)
            if candidates.size:
                tab.pivot(row, candidates[0])
            else:
                redundant.append(row)
        keep = np.setdiff1d(np.arange(m), redundant)
        tab.table = np.hstack(
            [tab.table[keep, :width], tab.table[keep, -1:]]
        )
        tab.basis = tab.basis[keep]
        kept = kept[keep]

    cost = np.concatenate([c, np.zeros(m_ub)])
    status = tab.run(cost, max_iter - tab.pivots)
    if status != "optimal":
        return _failed(status, n, m_ub, m_eq, tab.pivots, "simplex")

    full = np.zeros(width)
    full[tab.basis] = tab.table[:, -1]
    basic = A[kept][:, tab.basis]
    try:
        duals = np.linalg.solve(basic.T, cost[tab.basis])
    except np.linalg.LinAlgError:
        duals = np.linalg.lstsq(basic.T, cost[tab.basis], rcond=None)[0]
    marginals = np.zeros(m)
    marginals[kept] = duals
    marginals[flipped] *= -1
    return LPResult(
        frozen(full[:n]),
        float(c @ full[:n]),
        "optimal",
        frozen(marginals[:m_ub]),
        frozen(marginals[m_ub:]),
        tab.pivots,
        "simplex",
    )


def _solve_highs(c, A_ub, b_ub, A_eq, b_eq, max_iter):
    res = linprog(
        c,
        A_ub=A_ub if b_ub.size else None,
        b_ub=b_ub if b_ub.size else None,
        A_eq=A_eq if b_eq.size else None,
        b_eq=b_eq if b_eq.size else None,
        bounds=(0, None),
        method="highs",
        options={"maxiter": max_iter},
    )
    status = _HIGHS_STATUS.get(res.status, "numerical")
    if status != "optimal":
        return _failed(status, c.size, b_ub.size, b_eq.size, res.nit, "highs")
    return LPResult(
        frozen(res.x),
        float(res.fun),
        status,
        frozen(res.ineqlin.marginals if b_ub.size else np.zeros(0)),
        frozen(res.eqlin.marginals if b_eq.size else np.zeros(0)),
        int(res.nit),
        "highs",
    )


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    solver="simplex",
    max_iter=50000,
    tol=1e-9,
):
    """Solve a linear program over the non-negative orthant

    Parameters
    ----------
    c: array_like
        Objective coefficients (minimized).
    A_ub, b_ub: ~typing.Optional[array_like]
        Inequality constraints ``A_ub @ x <= b_ub``.
    A_eq, b_eq: ~typing.Optional[array_like]
        Equality constraints ``A_eq @ x == b_eq``.
    solver: str
        ``"simplex"`` (default) or ``"highs"``
    max_iter: int
        Pivot limit
    tol: float
        Pivoting and feasibility tolerance of the simplex backend

    Returns
    -------
    LPResult
        Check :attr:`LPResult.optimal`; this function does not raise
        on infeasible or unbounded problems.

    Raises
    ------
    DomainError
        For an unknown solver
    """
    if solver not in SOLVERS:
        raise DomainError("solver", solver, " or ".join(SOLVERS))
    c = np.asarray(c, dtype=float)
    A_ub, b_ub = _as_rows(A_ub, b_ub, c.size)
    A_eq, b_eq = _as_rows(A_eq, b_eq, c.size)
    if solver == "highs":
        result = _solve_highs(c, A_ub, b_ub, A_eq, b_eq, max_iter)
    else:
        result = _solve_simplex(
            c,
            A_ub.copy(),
            b_ub.copy(),
            A_eq.copy(),
            b_eq.copy(),
            max_iter,
            tol,
        )
    logger.debug(
        "LP %dx%d via %s: %s after %d iterations",
        b_ub.size + b_eq.size,
        c.size,
        solver,
        result.status,
        result.iterations,
    )
    return result
