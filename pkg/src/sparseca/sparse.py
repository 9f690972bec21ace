"""Sparse correspondence analysis via penalized rank-1 decomposition.

Each dimension solves ``max u' Z v`` over unit vectors with L1 budgets
on one or both sides, by alternating soft-thresholded projections. The
fitted direction is removed from the working matrix with a two-sided
projection before the next dimension is extracted, which keeps later
weight vectors nearly orthogonal to earlier ones even though sparsity
breaks exact orthogonality.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .ca import ContingencyTable, correspondence_matrix, standardized_residuals
from .errors import DegenerateInputError, InputError
from .linalg import full_svd, l1_constrained_unit_vector

VARIANTS = ("doubly_sparse", "column_sparse")
COL_SCALES = ("barycentric", "rescaled")


@dataclass(frozen=True)
class SparsityConstraint:
    """L1 budget specification for one fitted dimension.

    Four modes:

    - ``absolute``: explicit budgets for row weights (``sumabsu``, in
      ``[1, sqrt(n_rows)]``) and column weights (``sumabsv``, in
      ``[1, sqrt(n_cols)]``).
    - ``coupled``: one scale-free value ``sumabs`` in
      ``(max(1/sqrt(n_rows), 1/sqrt(n_cols)), 1]``; the side budgets are
      ``sumabs`` times the square root of each dimension.
    - ``unpenalized_rows``: row weights only normalized, column budget
      ``sumabsv`` applies.
    - ``nonzero_target``: ask for at least ``count`` surviving weights
      on ``axis`` ("rows" or "cols"); resolved to a concrete budget by
      a grid search before fitting.
    """

    mode: str
    sumabsu: float | None = None
    sumabsv: float | None = None
    sumabs: float | None = None
    count: int | None = None
    axis: str | None = None

    @classmethod
    def absolute(cls, sumabsu: float, sumabsv: float) -> "SparsityConstraint":
        return cls(mode="absolute", sumabsu=float(sumabsu), sumabsv=float(sumabsv))

    @classmethod
    def coupled(cls, sumabs: float) -> "SparsityConstraint":
        return cls(mode="coupled", sumabs=float(sumabs))

    @classmethod
    def unpenalized_rows(cls, sumabsv: float) -> "SparsityConstraint":
        return cls(mode="unpenalized_rows", sumabsv=float(sumabsv))

    @classmethod
    def nonzero_target(cls, count: int, axis: str) -> "SparsityConstraint":
        if axis not in ("rows", "cols"):
            raise InputError(f"axis must be 'rows' or 'cols', got {axis!r}")
        if count < 1:
            raise InputError(f"nonzero target must be at least 1, got {count}")
        return cls(mode="nonzero_target", count=int(count), axis=axis)

    def budgets(self, shape: tuple) -> tuple:
        """Effective (row budget, column budget) for a matrix of ``shape``.

        A row budget of None means the row weights are only normalized,
        never thresholded. Raises on out-of-range values; a
        ``nonzero_target`` constraint has no budget until resolved.
        """
        n_rows, n_cols = shape
        lim_u, lim_v = np.sqrt(n_rows), np.sqrt(n_cols)
        if self.mode == "absolute":
            if self.sumabsu is None or self.sumabsv is None:
                raise InputError("absolute mode needs both sumabsu and sumabsv")
            for name, value, lim in (
                ("sumabsu", self.sumabsu, lim_u),
                ("sumabsv", self.sumabsv, lim_v),
            ):
                if not 1.0 <= value <= lim + 1e-12:
                    raise InputError(f"{name}={value} outside [1, {lim:.6g}]")
            return self.sumabsu, self.sumabsv
        if self.mode == "coupled":
            if self.sumabs is None:
                raise InputError("coupled mode needs sumabs")
            low = max(1.0 / lim_u, 1.0 / lim_v)
            if not low < self.sumabs <= 1.0:
                raise InputError(
                    f"sumabs={self.sumabs} outside ({low:.6g}, 1]"
                )
            return self.sumabs * lim_u, self.sumabs * lim_v
        if self.mode == "unpenalized_rows":
            if self.sumabsv is None:
                raise InputError("unpenalized_rows mode needs sumabsv")
            if not 1.0 <= self.sumabsv <= lim_v + 1e-12:
                raise InputError(f"sumabsv={self.sumabsv} outside [1, {lim_v:.6g}]")
            return None, self.sumabsv
        if self.mode == "nonzero_target":
            raise InputError(
                "nonzero_target constraints must be resolved to a budget "
                "(see nnz_target_search) before fitting"
            )
        raise InputError(f"unknown constraint mode {self.mode!r}")

    def penalized_sides(self, shape: tuple) -> tuple:
        """Which sides carry an active budget, as a subset of ("rows", "cols")."""
        if self.mode == "unpenalized_rows":
            return ("cols",)
        if self.mode == "nonzero_target":
            return (self.axis,)
        return ("rows", "cols")


@dataclass
class SparseFactor:
    """One fitted rank-1 component.

    ``u`` and ``v`` are unit weight vectors; ``alpha`` is the bilinear
    form ``u' Z v`` they achieve and ``eigenvalue`` its square, the
    sparse analogue of a CA eigenvalue. Weights thresholded away are
    exact zeros, counted by ``nnz_u`` and ``nnz_v``.
    """

    u: np.ndarray
    v: np.ndarray
    alpha: float
    eigenvalue: float
    nnz_u: int
    nnz_v: int
    constraint: SparsityConstraint
    converged: bool
    n_iter: int


def pmd_rank1(
    z: np.ndarray,
    constraint: SparsityConstraint,
    max_iter: int = 200,
    tol: float = 1e-7,
) -> SparseFactor:
    """Penalized rank-1 fit of ``z`` by alternating L1 projections.

    Starts from the leading right singular vector of ``z`` and
    alternates ``u <- project(z v)``, ``v <- project(z' u)`` until the
    column weights move less than ``tol`` in the max norm. With both
    budgets at their upper bounds the projections are plain
    normalizations and the result is the leading singular triplet.

    Parameters
    ----------
    z : ndarray of shape (n_rows, n_cols)
        Matrix to decompose; must be nonzero.
    constraint : SparsityConstraint
        Budget specification. ``nonzero_target`` must be resolved first.
    max_iter, tol : int, float
        Iteration cap and convergence threshold on the column weights.

    Returns
    -------
    SparseFactor
        With ``alpha`` evaluated on ``z`` itself. A fit that hits
        ``max_iter`` is returned with ``converged=False`` and a warning.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InputError("matrix contains non-finite entries")
    if np.linalg.norm(z) == 0.0:
        raise DegenerateInputError("cannot decompose an all-zero matrix")
    budget_u, budget_v = constraint.budgets(z.shape)

    # the raw leading singular vector can exceed the L1 budget, so warm
    # start from its feasible projection; with an inactive budget this is
    # the singular vector itself
    v = l1_constrained_unit_vector(full_svd(z).V[:, 0], budget_v)
    u = np.zeros(z.shape[0])
    objective = -np.inf
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        zv = z @ v
        if budget_u is None:
            norm = np.linalg.norm(zv)
            if norm == 0.0:
                raise DegenerateInputError("row weights collapsed to zero")
            u = zv / norm
        else:
            u = l1_constrained_unit_vector(zv, budget_u)
        after_u = float(u @ zv)
        # each half-step maximizes the bilinear form over a set that
        # contains the previous iterate
        assert after_u >= objective - 1e-7 * max(1.0, abs(after_u))
        zu = z.T @ u
        v_new = l1_constrained_unit_vector(zu, budget_v)
        objective = float(zu @ v_new)
        assert objective >= after_u - 1e-7 * max(1.0, abs(objective))
        shift = float(np.abs(v_new - v).max())
        v = v_new
        if shift < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"rank-1 fit did not converge in {max_iter} iterations "
            f"(last column-weight change {shift:.2e})",
            stacklevel=2,
        )
    anchor = int(np.abs(v).argmax())
    if v[anchor] < 0:
        u, v = -u, -v
    alpha = float(u @ z @ v)
    assert alpha >= 0.0
    return SparseFactor(
        u=u,
        v=v,
        alpha=alpha,
        eigenvalue=alpha**2,
        nnz_u=int(np.count_nonzero(u)),
        nnz_v=int(np.count_nonzero(v)),
        constraint=constraint,
        converged=converged,
        n_iter=n_iter,
    )


def ppmd_deflate(z: np.ndarray, factor: SparseFactor) -> np.ndarray:
    """Remove a fitted component by projecting both sides of ``z``.

    Returns ``(I - u u') z (I - v v')``, which annihilates ``u`` on the
    left and ``v`` on the right exactly (up to roundoff), whatever the
    sparsity of the weights.
    """
    u, v = factor.u, factor.v
    if abs(np.linalg.norm(u) - 1.0) > 1e-8 or abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise InputError("deflation requires unit-norm weight vectors")
    uz = u @ z
    zv = z @ v
    return z - np.outer(u, uz) - np.outer(zv, v) + (u @ zv) * np.outer(u, v)


def coordinates_from_weights(
    p: np.ndarray,
    r: np.ndarray,
    c: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    eigenvalue: float,
) -> tuple:
    """Map weight vectors to row and column coordinates.

    The row coordinate is the margin-scaled image of ``v`` through the
    centered frequency matrix, rescaled so its weighted variance equals
    ``eigenvalue``; symmetrically for columns through ``u``. With exact
    singular vectors and the matching eigenvalue this reproduces the
    standard CA coordinates. Signs follow the weight vectors: the row
    coordinate keeps a nonnegative inner product with the margin-scaled
    ``u``, the column coordinate with the margin-scaled ``v``.
    """
    if eigenvalue <= 0:
        raise DegenerateInputError("coordinates need a positive eigenvalue")
    if abs(np.linalg.norm(u) - 1.0) > 1e-8 or abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise InputError("weights must be unit vectors")
    z = standardized_residuals(p, r, c)
    scale = np.sqrt(eigenvalue)

    zv = z @ v
    norm_zv = np.linalg.norm(zv)
    if norm_zv < 1e-300:
        raise DegenerateInputError("column weights lie in the null space")
    a = zv / np.sqrt(r) * (scale / norm_zv)
    if a @ (u / np.sqrt(r)) < 0:
        a = -a

    zu = z.T @ u
    norm_zu = np.linalg.norm(zu)
    if norm_zu < 1e-300:
        raise DegenerateInputError("row weights lie in the null space")
    b = zu / np.sqrt(c) * (scale / norm_zu)
    if b @ (v / np.sqrt(c)) < 0:
        b = -b
    return a, b


def column_sparse_coordinates(
    p: np.ndarray,
    r: np.ndarray,
    c: np.ndarray,
    a: np.ndarray,
    eigenvalue: float,
    spread: str = "rescaled",
) -> np.ndarray:
    """Column coordinates for a fit that only sparsifies column weights.

    ``barycentric`` places each column at the weighted mean of the row
    coordinates of its profile; ``rescaled`` stretches that direction so
    the weighted variance of the columns equals ``eigenvalue``, matching
    the spread of the rows.
    """
    if spread not in COL_SCALES:
        raise InputError(f"spread must be one of {COL_SCALES}, got {spread!r}")
    assert abs(a**2 @ r - eigenvalue) <= 1e-6 * max(1.0, eigenvalue)
    barycenter = (p.T @ a) / c
    if spread == "barycentric":
        return barycenter
    weighted = float(barycenter**2 @ c)
    if weighted < 1e-300:
        raise DegenerateInputError(
            "column barycenters are all at the origin; use spread='barycentric'"
        )
    return barycenter * np.sqrt(eigenvalue / weighted)


class NnzSearchResult(NamedTuple):
    """Outcome of a budget search for a nonzero-count target."""

    value: float
    nnz: int
    target_met: bool


def nnz_target_search(
    z: np.ndarray,
    target: int,
    axis: str = "cols",
    step: float = 0.2,
) -> NnzSearchResult:
    """Smallest grid budget whose fit keeps at least ``target`` weights.

    Walks a grid from 1 to the square root of the axis length in
    increments of ``step``, fitting a rank-1 component per value with
    the other side unpenalized, and returns the first budget reaching
    ``target`` nonzeros on ``axis``. If no grid value reaches it, the
    closest achieving budget is returned with ``target_met=False`` and
    a warning.
    """
    z = np.asarray(z, dtype=float)
    if axis not in ("rows", "cols"):
        raise InputError(f"axis must be 'rows' or 'cols', got {axis!r}")
    length = z.shape[0] if axis == "rows" else z.shape[1]
    if not 1 <= target <= length:
        raise InputError(f"target must be in [1, {length}], got {target}")
    grid = np.arange(1.0, np.sqrt(length) + 1e-9, step)
    best = None
    for value in grid:
        if axis == "cols":
            constraint = SparsityConstraint.unpenalized_rows(value)
        else:
            constraint = SparsityConstraint.absolute(value, np.sqrt(z.shape[1]))
        factor = pmd_rank1(z, constraint)
        nnz = factor.nnz_v if axis == "cols" else factor.nnz_u
        if nnz >= target:
            return NnzSearchResult(float(value), nnz, True)
        if best is None or nnz > best.nnz:
            best = NnzSearchResult(float(value), nnz, False)
    warnings.warn(
        f"no grid budget reaches {target} nonzero {axis} weights; "
        f"closest is {best.nnz} at {best.value:.6g}",
        stacklevel=2,
    )
    return best


@dataclass
class GramReport:
    """Pairwise inner products between fitted dimensions.

    Plain dot products for the weight vectors; mass-weighted products
    for the coordinates. Exact orthogonality is lost under sparsity, so
    off-diagonal magnitudes measure how far the fit drifts from it.
    """

    u_gram: np.ndarray
    v_gram: np.ndarray
    a_gram: np.ndarray
    b_gram: np.ndarray


@dataclass
class SparseCAModel:
    """Fitted sparse correspondence analysis.

    Attributes
    ----------
    table : ContingencyTable
    variant : str
        "doubly_sparse" (budgets on both sides) or "column_sparse"
        (row weights unpenalized, columns placed from the rows).
    factors : list of SparseFactor
        In extraction order; ``alpha``/``eigenvalue`` are evaluated on
        the original residual matrix, not the deflated ones.
    row_coords, col_coords : ndarray
        One column per dimension. Row coordinates always carry weighted
        variance equal to the eigenvalue; column coordinates do too,
        except under ``col_scale="barycentric"``.
    explained_ratios, explained_cumulative : ndarray
        Per-dimension and running share of the residual variance
        captured by projection onto the span of the column weights.
    gram_report : GramReport
    """

    table: ContingencyTable
    variant: str
    col_scale: str
    factors: list
    frequencies: np.ndarray
    row_masses: np.ndarray
    col_masses: np.ndarray
    residuals: np.ndarray
    row_coords: np.ndarray
    col_coords: np.ndarray
    explained_ratios: np.ndarray
    explained_cumulative: np.ndarray
    gram_report: GramReport

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([f.eigenvalue for f in self.factors])

    @property
    def n_dims(self) -> int:
        return len(self.factors)


def explained_variance(z: np.ndarray, weight_columns: np.ndarray) -> float:
    """Share of squared norm captured by projecting onto weight columns.

    Projects the rows of ``z`` onto the span of the given columns and
    returns the ratio of projected to total squared Frobenius norm,
    a value in [0, 1]. Because sparse weight vectors need not be
    orthogonal, the projector uses the inverse Gram matrix; a
    rank-deficient set degrades to a pseudo-inverse with a warning.
    """
    z = np.asarray(z, dtype=float)
    vk = np.asarray(weight_columns, dtype=float)
    if vk.ndim == 1:
        vk = vk[:, None]
    if vk.ndim != 2 or vk.shape[0] != z.shape[1]:
        raise InputError(
            f"weight columns of shape {vk.shape} do not match {z.shape[1]} columns"
        )
    total = float((z**2).sum())
    if total == 0.0:
        raise DegenerateInputError("zero matrix has no variance to explain")
    gram = vk.T @ vk
    evals = np.linalg.eigvalsh(gram)
    if evals.min() <= 1e-12 * max(evals.max(), 1.0):
        warnings.warn(
            "weight columns are linearly dependent; using a pseudo-inverse",
            stacklevel=2,
        )
        inv = np.linalg.pinv(gram, rcond=1e-12)
    else:
        inv = np.linalg.inv(gram)
    projected = z @ vk @ inv @ vk.T
    return float(np.clip((projected**2).sum() / total, 0.0, 1.0))


def _resolve_constraint(
    z: np.ndarray, constraint: SparsityConstraint, variant: str
) -> SparsityConstraint:
    if constraint.mode != "nonzero_target":
        return constraint
    found = nnz_target_search(z, constraint.count, axis=constraint.axis)
    if constraint.axis == "cols":
        if variant == "column_sparse":
            return SparsityConstraint.unpenalized_rows(found.value)
        return SparsityConstraint.absolute(np.sqrt(z.shape[0]), found.value)
    return SparsityConstraint.absolute(found.value, np.sqrt(z.shape[1]))


def fit_sparse_ca(
    table: ContingencyTable,
    constraints,
    n_dims: int | None = None,
    variant: str = "doubly_sparse",
    col_scale: str = "rescaled",
) -> SparseCAModel:
    """Fit a sparse correspondence analysis with one constraint per dimension.

    Parameters
    ----------
    table : ContingencyTable
    constraints : SparsityConstraint or sequence of SparsityConstraint
        One per extracted dimension; a single constraint is reused for
        all ``n_dims`` dimensions.
    n_dims : int, optional
        Number of dimensions; defaults to the number of constraints
        given (1 for a single constraint).
    variant : str
        "doubly_sparse" or "column_sparse". The column-sparse variant
        leaves row weights unpenalized and derives column coordinates
        from the row coordinates, spread per ``col_scale``.
    col_scale : str
        "rescaled" (default) or "barycentric"; column-sparse only.

    Returns
    -------
    SparseCAModel
    """
    if variant not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if col_scale not in COL_SCALES:
        raise InputError(f"col_scale must be one of {COL_SCALES}, got {col_scale!r}")
    if isinstance(constraints, SparsityConstraint):
        if n_dims is None:
            n_dims = 1
        constraints = [constraints] * n_dims
    else:
        constraints = list(constraints)
        if n_dims is None:
            n_dims = len(constraints)
        elif n_dims != len(constraints):
            raise InputError(
                f"{len(constraints)} constraints for {n_dims} dimensions"
            )
    if not constraints:
        raise InputError("at least one constraint is required")
    for constraint in constraints:
        if variant == "column_sparse" and constraint.mode not in (
            "unpenalized_rows",
            "nonzero_target",
        ):
            raise InputError(
                "column_sparse fits take unpenalized_rows or "
                "nonzero_target(axis='cols') constraints"
            )
        if (
            variant == "column_sparse"
            and constraint.mode == "nonzero_target"
            and constraint.axis != "cols"
        ):
            raise InputError("column_sparse fits can only target column nonzeros")

    p, r, c = correspondence_matrix(table)
    z0 = standardized_residuals(p, r, c)
    max_dims = min(p.shape[0], p.shape[1]) - 1
    if n_dims > max_dims:
        raise InputError(f"n_dims must be at most {max_dims}, got {n_dims}")

    factors = []
    a_cols, b_cols = [], []
    cumulative = []
    z_work = z0
    for constraint in constraints:
        resolved = _resolve_constraint(z_work, constraint, variant)
        factor = pmd_rank1(z_work, resolved)
        # the variance reported for a dimension is measured against the
        # original residual matrix, not the deflated one it was fitted on
        alpha = float(factor.u @ z0 @ factor.v)
        if alpha < 0:
            factor.u = -factor.u
            alpha = -alpha
        factor.alpha = alpha
        factor.eigenvalue = alpha**2
        a, b = coordinates_from_weights(p, r, c, factor.u, factor.v, factor.eigenvalue)
        if variant == "column_sparse":
            b = column_sparse_coordinates(
                p, r, c, a, factor.eigenvalue, spread=col_scale
            )
        factors.append(factor)
        a_cols.append(a)
        b_cols.append(b)
        cumulative.append(
            explained_variance(z0, np.column_stack([f.v for f in factors]))
        )
        z_work = ppmd_deflate(z_work, factor)

    row_coords = np.column_stack(a_cols)
    col_coords = np.column_stack(b_cols)
    u_mat = np.column_stack([f.u for f in factors])
    v_mat = np.column_stack([f.v for f in factors])
    gram = GramReport(
        u_gram=u_mat.T @ u_mat,
        v_gram=v_mat.T @ v_mat,
        a_gram=row_coords.T @ (row_coords * r[:, None]),
        b_gram=col_coords.T @ (col_coords * c[:, None]),
    )
    cumulative = np.array(cumulative)
    ratios = np.clip(np.diff(cumulative, prepend=0.0), 0.0, None)
    return SparseCAModel(
        table=table,
        variant=variant,
        col_scale=col_scale,
        factors=factors,
        frequencies=p,
        row_masses=r,
        col_masses=c,
        residuals=z0,
        row_coords=row_coords,
        col_coords=col_coords,
        explained_ratios=ratios,
        explained_cumulative=cumulative,
        gram_report=gram,
    )


@dataclass
class SparseContributionTable:
    """Contributions plus the weight tables with exact zeros.

    ``row_contrib``/``col_contrib`` follow the standard CA formula
    (mass times squared coordinate over eigenvalue) applied to the
    sparse coordinates. ``row_weights``/``col_weights`` are the raw
    weight vectors; thresholded entries are exactly 0, and
    ``zero_rows``/``zero_cols`` flag categories with zero weight on
    every dimension.
    """

    row_contrib: np.ndarray
    col_contrib: np.ndarray
    degenerate: np.ndarray
    row_weights: np.ndarray
    col_weights: np.ndarray
    zero_rows: np.ndarray
    zero_cols: np.ndarray


def sparse_contributions(model: SparseCAModel) -> SparseContributionTable:
    """Contribution and weight tables for a fitted sparse model."""
    lam = model.eigenvalues
    degenerate = lam <= 1e-14 * max(float(lam.max(initial=0.0)), 1.0)
    safe = np.where(degenerate, 1.0, lam)
    row = model.row_masses[:, None] * model.row_coords**2 / safe
    col = model.col_masses[:, None] * model.col_coords**2 / safe
    row[:, degenerate] = 0.0
    col[:, degenerate] = 0.0
    row_weights = np.column_stack([f.u for f in model.factors])
    col_weights = np.column_stack([f.v for f in model.factors])
    return SparseContributionTable(
        row_contrib=row,
        col_contrib=col,
        degenerate=degenerate,
        row_weights=row_weights,
        col_weights=col_weights,
        zero_rows=~np.any(row_weights != 0.0, axis=1),
        zero_cols=~np.any(col_weights != 0.0, axis=1),
    )
