"""Central finite-difference gradient checking."""

from __future__ import annotations

import numpy as np

# Below this magnitude both gradients count as zero; relative error is taken
# against the floor instead (keeps roundoff in f(x±h) from dominating).
GRAD_FLOOR = 1e-5


def numerical_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f()`` with respect to array ``x``, perturbed in place."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = f()
        flat[k] = old - h
        fm = f()
        flat[k] = old
        gflat[k] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor: float = GRAD_FLOOR) -> np.ndarray:
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def max_relative_error(f, wrt: dict, analytic: dict, h: float = 1e-6) -> tuple[float, str]:
    """Worst relative error over every coordinate of every array in ``wrt``.

    Returns ``(error, name)`` naming the array where the worst error occurred.
    """
    worst, where = 0.0, ""
    for name, arr in wrt.items():
        num = numerical_gradient(f, arr, h)
        err = float(relative_error(analytic[name], num).max(initial=0.0))
        if err > worst:
            worst, where = err, name
    return worst, where


def norm_relative_error(analytic, numeric) -> float:
    """``||a - n|| / max(||a||, ||n||)`` over a whole gradient vector."""
    analytic = np.ravel(analytic)
    numeric = np.ravel(numeric)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), np.finfo(float).tiny)
    return float(np.linalg.norm(analytic - numeric) / denom)
