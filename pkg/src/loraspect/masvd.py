"""Magnitude-aware spherically normalized SVD of weight-update matrices.

The decomposition runs in four stages: spherical normalization (rows, then
columns), candidate extraction via truncated SVDs of the two normalized
matrices, iterative L1-robust rank-1 fitting with deflation, and a final SVD
whose singular values are rescaled by the average row and column norms of
the original matrix so that global magnitude survives the normalization.

The scalar fit for a fixed direction pair is an exact weighted median: for
unit vectors u, v the minimizer of sum_ij |R_ij - d u_i v_j| over d is the
weighted median of the ratios R_ij / (u_i v_j) with weights |u_i v_j|.
Entries whose weight is at or below 1e-12 are excluded from the fit (but
never from the selection objective) to keep denormal quotients out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ValidationError
from .linalg import as_matrix
from .masvd_common import WEIGHT_FLOOR

# Entry count above which robust fitting moves to the compiled batched
# kernels (when importable). Below it the plain numpy path is faster.
KERNEL_MIN_ENTRIES = 1 << 18


@dataclass(frozen=True)
class MasSvdConfig:
    """Pipeline knobs.

    ``num_components`` is the number of rank-1 components extracted (the
    target rank of the robust reconstruction); ``candidate_width`` is how
    many singular vectors are kept per side when forming candidate pairs
    and defaults to ``num_components``. ``fit_subsample`` caps how many
    entries each L1 fit sees; unset means every entry.
    """

    num_components: int
    epsilon: float = 1e-6
    candidate_width: int | None = None
    fit_subsample: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.num_components < 1:
            raise ValidationError("num_components must be >= 1")
        if self.candidate_width is not None and self.candidate_width < 1:
            raise ValidationError("candidate_width must be >= 1")
        if self.fit_subsample is not None and self.fit_subsample < 1:
            raise ValidationError("fit_subsample must be >= 1")

    @property
    def width(self) -> int:
        return self.candidate_width if self.candidate_width is not None else self.num_components


@dataclass(frozen=True)
class SpectralResult:
    """Output of the full pipeline for one layer update."""

    singular_values: np.ndarray
    rescaled_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    avg_row_norm: float
    avg_col_norm: float
    components_extracted: int


def row_normalize(dw, epsilon: float) -> np.ndarray:
    """Divide each row by (its L2 norm + epsilon). Zero rows stay zero."""
    dw = as_matrix(dw)
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    norms = np.linalg.norm(dw, axis=1)
    return dw / (norms + epsilon)[:, None]


def col_normalize(wt, epsilon: float) -> np.ndarray:
    """Divide each column by (its L2 norm + epsilon)."""
    wt = as_matrix(wt)
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    norms = np.linalg.norm(wt, axis=0)
    return wt / (norms + epsilon)[None, :]


def average_norms(dw) -> tuple[float, float]:
    """Mean row L2 norm and mean column L2 norm of the raw update."""
    dw = as_matrix(dw)
    r_bar = float(np.linalg.norm(dw, axis=1).mean())
    c_bar = float(np.linalg.norm(dw, axis=0).mean())
    return r_bar, c_bar


def magnitude_rescale(s, r_bar: float, c_bar: float) -> np.ndarray:
    """Scale singular values by r_bar * c_bar; order is preserved."""
    s = np.asarray(s, dtype=np.float64)
    return s * (r_bar * c_bar)


def candidate_vectors(wt, wh, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-m left vectors of the fully normalized matrix and top-m right
    vectors of the row-normalized matrix, as (d x m, k x m) columns."""
    wt = as_matrix(wt, "wt")
    wh = as_matrix(wh, "wh")
    if m > min(wt.shape) or m > min(wh.shape):
        raise ValidationError(f"m={m} exceeds min matrix dimension")
    left = linalg.truncated_svd(wh, m).u
    right = linalg.truncated_svd(wt, m).v
    return left, right


def _ratio_arrays(residual, u, v):
    """Fit ratios and weights for one direction pair, with the weight floor
    applied. Ratios are computed as (R * (1/u)) * (1/v) so the compiled
    kernels and this reference path round identically."""
    w = np.outer(np.abs(u), np.abs(v))
    valid = w > WEIGHT_FLOOR
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = (residual * (1.0 / u)[:, None]) * (1.0 / v)[None, :]
    return rho[valid], w[valid]


def _weighted_median(rho: np.ndarray, w: np.ndarray) -> float:
    """Lower weighted median: smallest breakpoint whose cumulative weight
    reaches half the total."""
    if len(rho) == 0:
        return 0.0
    order = np.argsort(rho, kind="stable")
    rho = rho[order]
    cum = np.cumsum(w[order])
    half = 0.5 * cum[-1]
    j = int(np.searchsorted(cum, half, side="left"))
    return float(rho[min(j, len(rho) - 1)])


def _subsample_grid(u, v, subsample: int):
    """Deterministic stratified entry grid: rows strided over the sorted
    |u| order, columns strided over the sorted |v| order."""
    d, k = len(u), len(v)
    n_r = max(1, min(d, int(round(np.sqrt(subsample * d / k)))))
    n_c = max(1, min(k, subsample // n_r))
    rows = np.argsort(-np.abs(u), kind="stable")[:: max(1, -(-d // n_r))]
    cols = np.argsort(-np.abs(v), kind="stable")[:: max(1, -(-k // n_c))]
    return np.sort(rows), np.sort(cols)


def fit_rank1_l1(residual, u, v, subsample: int | None = None) -> float:
    """Exact scalar L1 fit of ``d`` in ``residual ~ d * outer(u, v)``.

    Returns the weighted median of the entry ratios (0.0 when every entry
    falls below the weight floor). With ``subsample`` set, the fit runs on
    a stratified grid of at most that many entries.
    """
    residual = as_matrix(residual, "residual")
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if residual.shape != (len(u), len(v)):
        raise ValidationError(
            f"residual shape {residual.shape} does not match vectors "
            f"({len(u)}, {len(v)})"
        )
    if subsample is not None and residual.size > subsample:
        rows, cols = _subsample_grid(u, v, subsample)
        residual = residual[np.ix_(rows, cols)]
        u = u[rows]
        v = v[cols]
    elif residual.size >= KERNEL_MIN_ENTRIES:
        from . import kernels

        if kernels.have_kernels():
            d_star, _ = kernels.exact_pair_fit(residual, u, v)
            return d_star
    rho, w = _ratio_arrays(residual, u, v)
    return _weighted_median(rho, w)


def _select_component_numpy(residual, left, right, subgrids=None):
    """One deflation step by exhaustive scan: fit every candidate pair,
    evaluate the full L1 objective, keep the argmin. Ties go to the lowest
    (left index, right index)."""
    best = None
    for a in range(left.shape[1]):
        for c in range(right.shape[1]):
            u = left[:, a]
            v = right[:, c]
            if subgrids is None:
                rho, w = _ratio_arrays(residual, u, v)
                d = _weighted_median(rho, w)
                obj = float(np.abs(residual - d * np.outer(u, v)).sum())
            else:
                rows, cols = subgrids[a, c]
                sub = residual[np.ix_(rows, cols)]
                rho, w = _ratio_arrays(sub, u[rows], v[cols])
                d = _weighted_median(rho, w)
                obj = float(
                    np.abs(sub - d * np.outer(u[rows], v[cols])).sum()
                )
            if best is None or obj < best[3]:
                best = (a, c, d, obj)
    return best


def _extract_components(dw, cfg: MasSvdConfig, left, right):
    """Deflation loop. Returns (approximation, ds, picks) where picks are
    the chosen (left, right) candidate indices per step."""
    d, k = dw.shape
    m_eff = min(cfg.num_components, d, k)
    use_kernels = False
    if cfg.fit_subsample is None and dw.size >= KERNEL_MIN_ENTRIES:
        from . import kernels

        use_kernels = kernels.have_kernels()

    subgrids = None
    if cfg.fit_subsample is not None and dw.size > cfg.fit_subsample:
        subgrids = {
            (a, c): _subsample_grid(left[:, a], right[:, c], cfg.fit_subsample)
            for a in range(left.shape[1])
            for c in range(right.shape[1])
        }

    residual = dw.copy()
    approx = np.zeros_like(dw)
    ds = []
    picks = []
    for _ in range(m_eff):
        if use_kernels:
            from . import kernels

            a, c, d_star, _ = kernels.select_component(residual, left, right)
        else:
            a, c, d_star, _ = _select_component_numpy(residual, left, right, subgrids)
        ds.append(d_star)
        picks.append((a, c))
        if d_star != 0.0:
            if use_kernels:
                from . import kernels

                kernels.deflate(residual, approx, d_star, left[:, a], right[:, c])
            else:
                step = d_star * np.outer(left[:, a], right[:, c])
                residual -= step
                approx += step
    return approx, np.array(ds), picks


def robust_low_rank(dw, cfg: MasSvdConfig) -> np.ndarray:
    """Outlier-robust rank-M approximation of ``dw``.

    Normalizes, extracts candidate directions, then repeatedly fits and
    deflates the best rank-1 component under the entrywise L1 objective.
    """
    dw = as_matrix(dw)
    wt = row_normalize(dw, cfg.epsilon)
    wh = col_normalize(wt, cfg.epsilon)
    width = min(cfg.width, *dw.shape)
    left, right = candidate_vectors(wt, wh, width)
    approx, _, _ = _extract_components(dw, cfg, left, right)
    return approx


def _result_from_components(left, right, picks, ds, m_eff, r_bar, c_bar, shape):
    d, k = shape
    f = np.zeros((d, m_eff))
    g = np.zeros((m_eff, k))
    for col, ((a, c), dv) in enumerate(zip(picks, ds)):
        f[:, col] = dv * left[:, a]
        g[col, :] = right[:, c]
    if np.all(ds == 0.0):
        s = np.zeros(m_eff)
        uu = linalg._complete_orthonormal(np.zeros((d, 0)), m_eff)
        vv = linalg._complete_orthonormal(np.zeros((k, 0)), m_eff)
    else:
        triple = linalg.svd_of_product(f, g, m_eff)
        uu, s, vv = triple.u, triple.s, triple.v
    s_prime = magnitude_rescale(s, r_bar, c_bar)
    return SpectralResult(
        singular_values=s,
        rescaled_values=s_prime,
        left_vectors=uu,
        right_vectors=vv,
        avg_row_norm=r_bar,
        avg_col_norm=c_bar,
        components_extracted=m_eff,
    )


def mas_svd(dw, cfg: MasSvdConfig, factors=None) -> SpectralResult:
    """Full pipeline for one layer update.

    ``factors`` may carry the (d x r, r x k) pair whose product is ``dw``
    (scaling already folded in). When present, norms and candidate SVDs are
    computed from the factors directly, which is exact for LoRA updates and
    much faster than dense decompositions; with ``fit_subsample`` set the
    dense matrix is never materialized at all.
    """
    if factors is not None:
        fa = as_matrix(factors[0], "factor a")
        fb = as_matrix(factors[1], "factor b")
        if fa.shape[1] != fb.shape[0]:
            raise ValidationError("factor inner dimensions do not match")
        shape = (fa.shape[0], fb.shape[1])
    else:
        dw = as_matrix(dw)
        shape = dw.shape

    d, k = shape
    m_eff = min(cfg.num_components, d, k)
    width = min(cfg.width, d, k)

    if factors is not None:
        row_norms = _product_row_norms(fa, fb)
        col_norms = _product_col_norms(fa, fb)
        r_bar = float(row_norms.mean())
        c_bar = float(col_norms.mean())
        d_r = 1.0 / (row_norms + cfg.epsilon)
        # Row-normalized update is (D_r A) B; its column norms feed the
        # second normalization stage.
        fa_r = fa * d_r[:, None]
        wt_col = _product_col_norms(fa_r, fb)
        d_c = 1.0 / (wt_col + cfg.epsilon)
        left = linalg.svd_of_product(fa_r, fb * d_c[None, :], width).u
        right = linalg.svd_of_product(fa_r, fb, width).v
        if cfg.fit_subsample is not None and d * k > cfg.fit_subsample:
            ds, picks = _extract_components_factored(fa, fb, cfg, left, right, m_eff)
            return _result_from_components(
                left, right, picks, ds, m_eff, r_bar, c_bar, shape
            )
        if dw is None:
            dw = fa @ fb
        else:
            dw = as_matrix(dw)
    else:
        r_bar, c_bar = average_norms(dw)
        wt = row_normalize(dw, cfg.epsilon)
        wh = col_normalize(wt, cfg.epsilon)
        left, right = candidate_vectors(wt, wh, width)

    _, ds, picks = _extract_components(dw, cfg, left, right)
    return _result_from_components(left, right, picks, ds, m_eff, r_bar, c_bar, shape)


def _product_row_norms(fa, fb):
    gram = fb @ fb.T
    sq = np.einsum("ij,ij->i", fa @ gram, fa)
    return np.sqrt(np.maximum(sq, 0.0))


def _product_col_norms(fa, fb):
    gram = fa.T @ fa
    sq = np.einsum("ij,ij->j", gram @ fb, fb)
    return np.sqrt(np.maximum(sq, 0.0))


def _extract_components_factored(fa, fb, cfg, left, right, m_eff):
    """Subsampled deflation that never materializes the dense update: each
    candidate pair keeps a residual on its own entry grid."""
    width_l = left.shape[1]
    width_r = right.shape[1]
    grids = {}
    subs = {}
    for a in range(width_l):
        for c in range(width_r):
            rows, cols = _subsample_grid(left[:, a], right[:, c], cfg.fit_subsample)
            grids[a, c] = (rows, cols)
            subs[a, c] = fa[rows] @ fb[:, cols]

    ds = []
    picks = []
    for _ in range(m_eff):
        best = None
        for a in range(width_l):
            for c in range(width_r):
                rows, cols = grids[a, c]
                sub = subs[a, c]
                u = left[rows, a]
                v = right[cols, c]
                rho, w = _ratio_arrays(sub, u, v)
                d_star = _weighted_median(rho, w)
                obj = float(np.abs(sub - d_star * np.outer(u, v)).sum())
                if best is None or obj < best[3]:
                    best = (a, c, d_star, obj)
        a, c, d_star, _ = best
        ds.append(d_star)
        picks.append((a, c))
        if d_star != 0.0:
            for (aa, cc), (rows, cols) in grids.items():
                subs[aa, cc] -= d_star * np.outer(left[rows, a], right[cols, c])
    return np.array(ds), picks
