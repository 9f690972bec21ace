"""Dense SVD and the L1-constrained projections used by the penalized fits."""

from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, InputError


class SvdResult(NamedTuple):
    """Thin SVD ``x = U @ diag(s) @ V.T`` with deterministic signs.

    Attributes
    ----------
    U : ndarray of shape (n_rows, k)
        Left singular vectors, one per column.
    s : ndarray of shape (k,)
        Singular values in decreasing order, all nonnegative.
    V : ndarray of shape (n_cols, k)
        Right singular vectors, one per column.
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray


def full_svd(x: np.ndarray) -> SvdResult:
    """Thin SVD with a fixed sign convention.

    Each right singular vector is flipped, together with its left partner,
    so that its largest-magnitude entry is positive (first such entry on
    ties). This makes repeated factorizations of equal matrices identical.

    Parameters
    ----------
    x : ndarray of shape (n_rows, n_cols)
        Real matrix with finite entries.

    Returns
    -------
    SvdResult
        ``U``, ``s``, ``V`` with ``k = min(n_rows, n_cols)`` components.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"expected a 2-d array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    v = vt.T
    # argmax over |v| picks the first maximal entry, so ties break low.
    anchor = np.abs(v).argmax(axis=0)
    flip = np.sign(v[anchor, np.arange(v.shape[1])])
    flip[flip == 0.0] = 1.0
    return SvdResult(u * flip, s, v * flip)


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    """Shrink ``x`` toward zero by ``t``, clipping at zero."""
    return np.sign(x) * np.clip(np.abs(x) - t, 0.0, None)


def _one_sparse(x: np.ndarray) -> np.ndarray:
    j = int(np.abs(x).argmax())
    u = np.zeros_like(x, dtype=float)
    u[j] = 1.0 if x[j] >= 0 else -1.0
    return u


def l1_constrained_unit_vector(
    x: np.ndarray,
    c: float,
    return_delta: bool = False,
    tol: float = 1e-8,
    max_steps: int = 60,
):
    """Maximize ``x @ u`` over unit vectors with L1 norm at most ``c``.

    The maximizer is a soft-thresholded copy of ``x`` scaled to unit
    length; the threshold is zero when ``x`` already satisfies the L1
    bound and is otherwise found by bisection. ``c`` must lie in
    ``[1, sqrt(len(x))]``: below 1 the constraints are incompatible with
    a unit vector, above ``sqrt(len(x))`` the bound can never bind.

    Parameters
    ----------
    x : ndarray of shape (n,)
        Direction to project. Must contain a nonzero entry.
    c : float
        L1 budget, between 1 and ``sqrt(n)`` inclusive.
    return_delta : bool
        When true, also return the threshold that was applied.
    tol : float
        Bisection stops once the L1 norm is within ``tol`` of ``c``.
    max_steps : int
        Cap on bisection iterations.

    Returns
    -------
    ndarray of shape (n,), or (ndarray, float)
        Unit vector ``u`` with ``sum(abs(u)) <= c + tol``; with
        ``return_delta``, the threshold as a second value.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"expected a 1-d array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("vector contains non-finite entries")
    n = x.size
    if n == 0:
        raise DegenerateInputError("cannot project an empty vector")
    if not (1.0 <= c <= np.sqrt(n) + 1e-12):
        raise InputError(f"L1 budget {c} outside [1, sqrt({n})]")
    norm2 = np.linalg.norm(x)
    if norm2 == 0.0:
        raise DegenerateInputError("cannot project an all-zero vector")

    def feasible(delta: float):
        shrunk = soft_threshold(x, delta)
        length = np.linalg.norm(shrunk)
        if length == 0.0:
            return None, 0.0
        u = shrunk / length
        return u, float(np.abs(u).sum())

    if c == 1.0:
        u = _one_sparse(x)
        return (u, float(np.abs(x).max())) if return_delta else u

    u, l1 = feasible(0.0)
    if l1 <= c + tol:
        return (u, 0.0) if return_delta else u

    # l1(delta) falls from ||x||_1/||x||_2 toward sqrt(#maximal ties) as
    # delta approaches max|x|; bisect keeping hi on the feasible side.
    lo, hi = 0.0, float(np.abs(x).max())
    best = None
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        u_mid, l1_mid = feasible(mid)
        if u_mid is not None and l1_mid <= c + tol:
            best = (u_mid, mid)
            hi = mid
            if c - l1_mid <= tol:
                break
        else:
            lo = mid
    if best is None:
        # ties at the maximum keep the L1 norm above c; fall back to the
        # sparsest admissible answer.
        u = _one_sparse(x)
        return (u, float(np.abs(x).max())) if return_delta else u
    u, delta = best
    return (u, delta) if return_delta else u
