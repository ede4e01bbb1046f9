"""Limited-memory BFGS with a backtracking (Armijo) line search.

Written against flat float64 parameter vectors. Single-threaded and free of
randomness, so repeated runs on the same problem are bitwise identical.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["LbfgsResult", "OptimizationError", "lbfgs"]


class OptimizationError(RuntimeError):
    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass
class LbfgsResult:
    x: np.ndarray
    fun: float
    n_iter: int
    converged: bool
    history: list[float] = field(default_factory=list)


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        alphas.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def lbfgs(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    max_iter: int = 400,
    history: int = 10,
    rel_tol: float = 1e-7,
    patience: int = 5,
    c1: float = 1e-4,
    shrink: float = 0.5,
    max_backtracks: int = 40,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
) -> LbfgsResult:
    """Minimise ``fun_grad`` starting from ``x0``.

    Stops after ``max_iter`` iterations or once the relative decrease of the
    objective has stayed below ``rel_tol`` for ``patience`` consecutive
    iterations. ``callback(it, x, f)`` is invoked after every accepted step,
    with ``it`` counting from 1.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun_grad(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise OptimizationError(0, "non-finite objective or gradient at the starting point")

    s_hist: deque = deque(maxlen=history)
    y_hist: deque = deque(maxlen=history)
    hist = [float(f)]
    stalled = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _two_loop(g, list(s_hist), list(y_hist))
        slope = g @ p
        if not slope < 0:
            # lost descent direction: restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            p = -g
            slope = g @ p
        if slope == 0:
            converged = True
            it -= 1
            break
        step = 1.0 if s_hist else min(1.0, 1.0 / np.sqrt(-slope))

        for _ in range(max_backtracks):
            x_new = x + step * p
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                break
            step *= shrink
        else:
            # no acceptable step: we are at numerical precision
            converged = True
            it -= 1
            break
        if not np.all(np.isfinite(g_new)):
            raise OptimizationError(it, "non-finite gradient")

        s = x_new - x
        y = g_new - g
        if y @ s > 1e-12 * (s @ s):
            s_hist.append(s)
            y_hist.append(y)

        improvement = (f - f_new) / max(abs(f), 1e-300)
        x, f, g = x_new, float(f_new), g_new
        hist.append(f)
        if callback is not None:
            callback(it, x, f)

        stalled = stalled + 1 if improvement < rel_tol else 0
        if stalled >= patience:
            converged = True
            break

    return LbfgsResult(x=x, fun=f, n_iter=it, converged=converged, history=hist)
