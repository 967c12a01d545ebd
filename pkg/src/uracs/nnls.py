"""Non-negative least squares via the Lawson-Hanson active-set method.

Solves min ||A x - y||_2 subject to x >= 0. At exit either the KKT
conditions hold within ``tol`` (converged) or the iteration cap was hit and
the best iterate so far is returned with ``converged`` False.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class NnlsResult:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    # objective ||Ax - y|| after each passive-set update, for monotonicity checks
    objective_history: list[float] = field(default_factory=list)


def nnls_solve(A: np.ndarray, y: np.ndarray, tol: float = 1e-8,
               max_iter: int | None = None) -> NnlsResult:
    """Active-set NNLS. ``max_iter`` caps least-squares subproblem solves
    (default 10 * number of columns); ties in the entering variable go to the
    lowest column index."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise ValueError("A must be (n, c) and y length n")
    n, c = A.shape
    if max_iter is None:
        max_iter = 10 * max(c, 1)

    x = np.zeros(c)
    passive = np.zeros(c, dtype=bool)
    iterations = 0
    converged = False
    history = [float(np.linalg.norm(y))]

    def solve_passive() -> np.ndarray:
        z = np.zeros(c)
        cols = np.flatnonzero(passive)
        if cols.size:
            z[cols] = np.linalg.lstsq(A[:, cols], y, rcond=None)[0]
        return z

    while True:
        w = A.T @ (y - A @ x)
        free = ~passive
        if not free.any() or w[free].max() <= tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        # np.argmax returns the first maximizer, which is the tie rule we want
        w_masked = np.where(free, w, -np.inf)
        passive[int(np.argmax(w_masked))] = True

        z = solve_passive()
        iterations += 1
        while passive.any() and z[passive].min() <= 0:
            if iterations >= max_iter:
                break
            # step toward z until the first passive coordinate hits zero
            neg = passive & (z <= 0)
            denom = x[neg] - z[neg]
            ratio = np.where(denom > 0, x[neg] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(ratio.min())
            x = x + alpha * (z - x)
            passive[passive & (np.abs(x) <= 1e-14)] = False
            x[~passive] = 0.0
            z = solve_passive()
            iterations += 1
        else:
            x = z
        history.append(float(np.linalg.norm(A @ x - y)))

    return NnlsResult(
        x=x,
        residual_norm=float(np.linalg.norm(A @ x - y)),
        iterations=iterations,
        converged=converged,
        objective_history=history,
    )
