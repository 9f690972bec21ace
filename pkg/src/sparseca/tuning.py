"""Choosing the sparsity budgets: criteria, grids, and weight paths.

Three selection routes over a grid of budgets: a sparsity index that
rewards zeros while penalizing lost fit, a BIC built on the rank-1
residual, and matrix-completion cross-validation. Grids come in a 1-D
coupled form (one scale-free value driving both sides) and a 2-D form
(independent row and column budgets). Grid cells are independent pure
computations, evaluated through a thread pool capped by the
``SPARSE_CA_THREADS`` environment variable; results are reduced in
grid order regardless of execution order.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .linalg import full_svd
from .sparse import (
    SparseFactor,
    SparsityConstraint,
    explained_variance,
    pmd_rank1,
    ppmd_deflate,
)


def _parallel_map(fn, items):
    """Order-preserving map over independent work items."""
    items = list(items)
    env = os.environ.get("SPARSE_CA_THREADS", "").strip()
    if env:
        try:
            n_threads = int(env)
        except ValueError:
            raise InputError(f"SPARSE_CA_THREADS must be an integer, got {env!r}")
        if n_threads < 1:
            raise InputError(f"SPARSE_CA_THREADS must be positive, got {n_threads}")
    else:
        n_threads = os.cpu_count() or 1
    n_threads = min(n_threads, len(items)) or 1
    if n_threads == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class TuningGrid:
    """Criterion surface over a budget grid.

    ``axis1`` holds coupled values (1-D search) or row budgets (2-D);
    ``axis2`` is None for 1-D searches and holds column budgets
    otherwise. ``values``, ``nnz_u``, ``nnz_v`` and ``fit`` have one
    entry per cell, shaped ``(len(axis1),)`` or
    ``(len(axis1), len(axis2))``.
    """

    criterion: str
    axis1: np.ndarray
    axis2: np.ndarray | None
    values: np.ndarray
    nnz_u: np.ndarray
    nnz_v: np.ndarray
    fit: np.ndarray


@dataclass
class TuningResult:
    """Outcome of a grid search.

    ``optimum`` is the selected budget (a float for 1-D, a pair for
    2-D): the argmax for the sparsity index, the argmin for BIC and
    cross-validation, with ties broken toward the sparser budget.
    """

    criterion: str
    optimum: object
    optimum_nnz: tuple
    grid: TuningGrid


@dataclass
class WeightPath:
    """Fitted weights along a 1-D budget grid.

    ``u_path`` has shape (grid length, n_rows), ``v_path``
    (grid length, n_cols); ``zero_fraction`` is the share of zero
    weights per grid value.
    """

    values: np.ndarray
    u_path: np.ndarray
    v_path: np.ndarray
    zero_fraction: np.ndarray


IS_ORIENTATIONS = ("tradeoff", "printed")


def is_criterion(
    z: np.ndarray,
    factors,
    total_params: int | None = None,
    nnz_total: int | None = None,
    orientation: str = "tradeoff",
) -> float:
    """Index of sparsity for a set of fitted factors.

    The index multiplies a fit ratio by the squared fraction of zero
    weights. The default "tradeoff" orientation divides the sparse fit
    by the fit of the same number of plain SVD components, so the index
    climbs only while zeros are cheap; the "printed" orientation
    inverts the ratio. A factor set with no zero weights scores exactly
    0 either way.

    Parameters
    ----------
    z : ndarray
        The undeflated residual matrix the factors decompose.
    factors : sequence of SparseFactor
        Accumulated factors, earlier dimensions first.
    total_params, nnz_total : int, optional
        Weight-entry count and nonzero count over the penalized sides;
        derived from the factors when omitted.
    orientation : str
        "tradeoff" (default) or "printed".
    """
    factors = list(factors)
    if not factors:
        raise InputError("at least one factor is required")
    if orientation not in IS_ORIENTATIONS:
        raise InputError(
            f"orientation must be one of {IS_ORIENTATIONS}, got {orientation!r}"
        )
    z = np.asarray(z, dtype=float)
    shape = z.shape
    if total_params is None or nnz_total is None:
        params = 0
        nnz = 0
        for factor in factors:
            sides = factor.constraint.penalized_sides(shape)
            if "rows" in sides:
                params += shape[0]
                nnz += factor.nnz_u
            if "cols" in sides:
                params += shape[1]
                nnz += factor.nnz_v
        if total_params is None:
            total_params = params
        if nnz_total is None:
            nnz_total = nnz
    if total_params <= 0:
        raise InputError("total_params must be positive")
    zero_fraction = (total_params - nnz_total) / total_params
    if zero_fraction == 0.0:
        return 0.0
    v_cols = np.column_stack([f.v for f in factors])
    fit_sparse = explained_variance(z, v_cols)
    fit_full = explained_variance(z, full_svd(z).V[:, : len(factors)])
    if orientation == "tradeoff":
        ratio = fit_sparse / fit_full if fit_full > 0 else 0.0
    else:
        ratio = fit_full / fit_sparse if fit_sparse > 0 else np.inf
    return float(ratio * zero_fraction**2)


def residual_variance_estimate(z: np.ndarray) -> float:
    """Error-variance scale for the BIC: mean squared residual of the
    unconstrained rank-1 fit, with one degree of freedom per weight."""
    z = np.asarray(z, dtype=float)
    n_cells = z.size
    df_full = z.shape[0] + z.shape[1]
    if n_cells <= df_full:
        raise InputError("matrix too small to estimate a residual variance")
    sigma = full_svd(z).s
    residual = float((sigma[1:] ** 2).sum())
    return residual / (n_cells - df_full)


def bic_criterion(
    z: np.ndarray,
    factor: SparseFactor,
    sigma2_hat: float | None = None,
    df: int | None = None,
) -> float:
    """Bayesian information criterion for one rank-1 factor on ``z``.

    Scaled residual of the rank-1 reconstruction plus a model-size
    penalty counting the surviving weights on the penalized sides.
    ``sigma2_hat`` defaults to the estimate from the unconstrained
    rank-1 fit of the same matrix, so it does not move with the budget.
    """
    z = np.asarray(z, dtype=float)
    if sigma2_hat is None:
        sigma2_hat = residual_variance_estimate(z)
    if sigma2_hat <= 0:
        raise InputError(f"sigma2_hat must be positive, got {sigma2_hat}")
    if df is None:
        sides = factor.constraint.penalized_sides(z.shape)
        df = (factor.nnz_u if "rows" in sides else 0) + (
            factor.nnz_v if "cols" in sides else 0
        )
    alpha = float(factor.u @ z @ factor.v)
    residual = float(((z - alpha * np.outer(factor.u, factor.v)) ** 2).sum())
    n_cells = z.size
    return residual / (n_cells * sigma2_hat) + np.log(n_cells) / n_cells * df


def cv_error(
    z: np.ndarray,
    constraint: SparsityConstraint,
    folds: int = 10,
    holdout_fraction: float = 0.10,
    repeats: int = 1,
    seed: int | None = None,
    sweeps: int = 20,
) -> float:
    """Matrix-completion cross-validation error for one budget.

    Per fold, a scattered random tenth of the cells is blanked, the
    rank-1 fit is alternated with refilling the blanks (starting from
    zero) for a fixed number of sweeps, and the squared error of the
    final reconstruction on the blanks is recorded. Returns the mean
    over folds and repeats. The same seed always yields the same folds
    and therefore the same error.
    """
    z = np.asarray(z, dtype=float)
    n_cells = z.size
    # folds partition a permutation of the cells, so cap the holdout so
    # that all folds fit even when the fraction rounds past n/folds
    holdout = min(max(1, int(round(n_cells * holdout_fraction))), n_cells // folds)
    if holdout < 1:
        raise InputError(
            f"{folds} folds need at least {folds} cells, got {n_cells}"
        )
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(repeats):
        order = rng.permutation(n_cells)
        for fold in range(folds):
            held = order[fold * holdout : (fold + 1) * holdout]
            mask = np.zeros(n_cells, dtype=bool)
            mask[held] = True
            mask = mask.reshape(z.shape)
            filled = np.where(mask, 0.0, z)
            reconstruction = filled
            for _ in range(sweeps):
                factor = pmd_rank1(filled, constraint)
                reconstruction = factor.alpha * np.outer(factor.u, factor.v)
                filled = np.where(mask, reconstruction, z)
            errors.append(float(((z[mask] - reconstruction[mask]) ** 2).mean()))
    return float(np.mean(errors))


def _deflate_through(z: np.ndarray, prior_factors) -> np.ndarray:
    for factor in prior_factors:
        z = ppmd_deflate(z, factor)
    return z


def default_coupled_grid(shape: tuple, step: float = 0.01) -> np.ndarray:
    """Coupled budgets from just above the 1-sparse bound up to 1."""
    low = max(1.0 / np.sqrt(shape[0]), 1.0 / np.sqrt(shape[1]))
    start = np.floor(low / step + 1.0 + 1e-9) * step
    return np.round(np.arange(start, 1.0 + step / 2, step), 10)


def _pick_optimum(cells, maximize):
    """Index of the best cell, first (sparser) winner on ties."""
    best = None
    for idx, value in enumerate(cells):
        if np.isnan(value):
            continue
        if best is None:
            best = idx
            continue
        if maximize:
            if value > cells[best]:
                best = idx
        elif value < cells[best]:
            best = idx
    if best is None:
        raise InputError("criterion is undefined on the whole grid")
    return best


def _evaluate_cell(
    z_original,
    z_work,
    constraint,
    prior_factors,
    criterion,
    orientation,
    sigma2_hat,
    seed,
    cv_repeats,
):
    factor = pmd_rank1(z_work, constraint)
    chain = list(prior_factors) + [factor]
    fit = explained_variance(z_original, np.column_stack([f.v for f in chain]))
    if criterion == "is":
        value = is_criterion(z_original, chain, orientation=orientation)
    elif criterion == "bic":
        value = bic_criterion(z_work, factor, sigma2_hat=sigma2_hat)
    elif criterion == "cv":
        value = cv_error(z_work, constraint, seed=seed, repeats=cv_repeats)
    else:
        raise InputError(f"criterion must be 'is', 'bic' or 'cv', got {criterion!r}")
    return value, factor.nnz_u, factor.nnz_v, fit


def grid_search_1d(
    z: np.ndarray,
    grid=None,
    criterion: str = "is",
    prior_factors=(),
    orientation: str = "tradeoff",
    seed: int | None = None,
    cv_repeats: int = 1,
) -> TuningResult:
    """Search a coupled-budget grid for one dimension.

    ``z`` is the undeflated residual matrix; ``prior_factors`` are the
    already-fixed earlier dimensions, re-deflated internally so the
    candidate factor for this dimension is fitted on the right matrix.
    The sparsity index is evaluated on the accumulated factor set, BIC
    and cross-validation on the current dimension alone.
    """
    z = np.asarray(z, dtype=float)
    if grid is None:
        grid = default_coupled_grid(z.shape)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InputError("grid must contain at least one value")
    if np.any(np.diff(grid) <= 0):
        raise InputError("grid values must be strictly increasing")
    z_work = _deflate_through(z, prior_factors)
    sigma2_hat = residual_variance_estimate(z_work) if criterion == "bic" else None

    def cell(value):
        return _evaluate_cell(
            z,
            z_work,
            SparsityConstraint.coupled(value),
            prior_factors,
            criterion,
            orientation,
            sigma2_hat,
            seed,
            cv_repeats,
        )

    results = _parallel_map(cell, grid)
    values = np.array([r[0] for r in results])
    nnz_u = np.array([r[1] for r in results])
    nnz_v = np.array([r[2] for r in results])
    fit = np.array([r[3] for r in results])
    best = _pick_optimum(values, maximize=(criterion == "is"))
    tuning_grid = TuningGrid(
        criterion=criterion,
        axis1=grid,
        axis2=None,
        values=values,
        nnz_u=nnz_u,
        nnz_v=nnz_v,
        fit=fit,
    )
    return TuningResult(
        criterion=criterion,
        optimum=float(grid[best]),
        optimum_nnz=(int(nnz_u[best]), int(nnz_v[best])),
        grid=tuning_grid,
    )


def default_absolute_grid(length: int, points: int = 10) -> np.ndarray:
    """Evenly spaced budgets from 1 to the square root of the axis length."""
    return np.linspace(1.0, np.sqrt(length), points)


def grid_search_2d(
    z: np.ndarray,
    grid_u=None,
    grid_v=None,
    criterion: str = "is",
    prior_factors=(),
    orientation: str = "tradeoff",
    seed: int | None = None,
    cv_repeats: int = 1,
) -> TuningResult:
    """Search independent row and column budgets for one dimension.

    Full factorial evaluation of ``grid_u`` times ``grid_v``; ties are
    broken toward the lexicographically sparser pair.
    """
    z = np.asarray(z, dtype=float)
    if grid_u is None:
        grid_u = default_absolute_grid(z.shape[0])
    if grid_v is None:
        grid_v = default_absolute_grid(z.shape[1])
    grid_u = np.asarray(grid_u, dtype=float)
    grid_v = np.asarray(grid_v, dtype=float)
    if grid_u.size == 0 or grid_v.size == 0:
        raise InputError("grids must contain at least one value")
    z_work = _deflate_through(z, prior_factors)
    sigma2_hat = residual_variance_estimate(z_work) if criterion == "bic" else None
    pairs = [(su, sv) for su in grid_u for sv in grid_v]

    def cell(pair):
        return _evaluate_cell(
            z,
            z_work,
            SparsityConstraint.absolute(*pair),
            prior_factors,
            criterion,
            orientation,
            sigma2_hat,
            seed,
            cv_repeats,
        )

    results = _parallel_map(cell, pairs)
    shape = (grid_u.size, grid_v.size)
    values = np.array([r[0] for r in results]).reshape(shape)
    nnz_u = np.array([r[1] for r in results]).reshape(shape)
    nnz_v = np.array([r[2] for r in results]).reshape(shape)
    fit = np.array([r[3] for r in results]).reshape(shape)
    best = _pick_optimum(
        [r[0] for r in results], maximize=(criterion == "is")
    )
    iu, iv = divmod(best, grid_v.size)
    tuning_grid = TuningGrid(
        criterion=criterion,
        axis1=grid_u,
        axis2=grid_v,
        values=values,
        nnz_u=nnz_u,
        nnz_v=nnz_v,
        fit=fit,
    )
    return TuningResult(
        criterion=criterion,
        optimum=(float(grid_u[iu]), float(grid_v[iv])),
        optimum_nnz=(int(nnz_u[iu, iv]), int(nnz_v[iu, iv])),
        grid=tuning_grid,
    )


def weight_paths(z: np.ndarray, grid=None, prior_factors=()) -> WeightPath:
    """Fitted weight vectors along a coupled grid, for path plots."""
    z = np.asarray(z, dtype=float)
    if grid is None:
        grid = default_coupled_grid(z.shape)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InputError("grid must contain at least one value")
    z_work = _deflate_through(z, prior_factors)

    def cell(value):
        factor = pmd_rank1(z_work, SparsityConstraint.coupled(value))
        return factor.u, factor.v

    results = _parallel_map(cell, grid)
    u_path = np.array([u for u, _ in results])
    v_path = np.array([v for _, v in results])
    n_weights = z.shape[0] + z.shape[1]
    zero_fraction = np.array(
        [
            ((u == 0).sum() + (v == 0).sum()) / n_weights
            for u, v in results
        ]
    )
    return WeightPath(
        values=grid, u_path=u_path, v_path=v_path, zero_fraction=zero_fraction
    )
