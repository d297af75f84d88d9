"""Dense real-matrix kernels: products, norms, truncated SVD, L1 error.

All computation runs in float64 regardless of the precision the inputs were
stored in; layer matrices are small enough that working precision beats
memory savings once deflation and L1 fitting start accumulating error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError

# Inputs at or below this short-side size (or with a deep truncation) go
# through LAPACK directly; larger ones use seeded subspace iteration.
_FULL_SVD_LIMIT = 256

# Fixed seed for the randomized range finder. Any constant works; it only
# has to be the same on every call so results are reproducible.
_RANGE_FINDER_SEED = 0x5EED

_SUBSPACE_ITERATIONS = 2


@dataclass(frozen=True)
class SvdTriple:
    """Top-t singular triplets: ``u`` is d x t, ``s`` length t, ``v`` k x t.

    ``s`` is nonincreasing and nonnegative; columns of ``u`` and ``v`` are
    orthonormal. The reconstruction is ``u @ diag(s) @ v.T``.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def as_matrix(x, name="matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    w = np.asarray(x, dtype=np.float64)
    if w.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got {w.ndim}-D")
    if w.shape[0] < 1 or w.shape[1] < 1:
        raise ValidationError(f"{name} must be non-empty, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(w)


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValidationError(
            f"inner dimensions do not match: {a.shape} x {b.shape}"
        )
    return a @ b


def row_l2_norms(w) -> np.ndarray:
    """Euclidean norm of each row."""
    w = as_matrix(w)
    return np.linalg.norm(w, axis=1)


def col_l2_norms(w) -> np.ndarray:
    """Euclidean norm of each column."""
    w = as_matrix(w)
    return np.linalg.norm(w, axis=0)


def l1_error(a, b) -> float:
    """Entrywise absolute difference, summed."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def _fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip paired singular vectors so each left vector's largest-magnitude
    entry is positive. Makes output deterministic for golden-file tests."""
    if u.shape[1] == 0:
        return u, v
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u = u.copy()
    v = v.copy()
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return u, v


def _full_svd(w: np.ndarray, t: int) -> SvdTriple:
    try:
        u, s, vt = np.linalg.svd(w, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"LAPACK SVD did not converge: {exc}") from exc
    u, v = _fix_signs(u[:, :t], vt[:t].T)
    return SvdTriple(u=u, s=np.maximum(s[:t], 0.0), v=v)


def _randomized_svd(w: np.ndarray, t: int) -> SvdTriple:
    """Subspace iteration with a fixed-seed Gaussian range finder.

    Exact (to roundoff) when the numerical rank of ``w`` is at most t, which
    covers every LoRA update this library materializes; for general dense
    matrices the top-t values are approximate at the usual randomized-SVD
    accuracy rather than the LAPACK-relative guarantee of the small path.
    """
    d, k = w.shape
    p = min(t + max(10, t), min(d, k))
    rng = np.random.Generator(np.random.Philox(key=_RANGE_FINDER_SEED))
    omega = rng.standard_normal((k, p))
    y = w @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(_SUBSPACE_ITERATIONS):
        z, _ = np.linalg.qr(w.T @ q)
        q, _ = np.linalg.qr(w @ z)
    b = q.T @ w
    try:
        ub, s, vt = np.linalg.svd(b, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"projected SVD did not converge: {exc}") from exc
    u = q @ ub
    u, v = _fix_signs(u[:, :t], vt[:t].T)
    return SvdTriple(u=u, s=np.maximum(s[:t], 0.0), v=v)


def truncated_svd(w, t: int) -> SvdTriple:
    """Top-t singular triplets of ``w``.

    Deterministic for identical inputs: the small path is plain LAPACK, the
    large path is subspace iteration with a fixed seed. ``t`` must satisfy
    1 <= t <= min(d, k).
    """
    w = as_matrix(w)
    d, k = w.shape
    if not 1 <= t <= min(d, k):
        raise ValidationError(
            f"truncation rank {t} out of range for shape {w.shape}"
        )
    if min(d, k) <= _FULL_SVD_LIMIT or t > min(d, k) // 4:
        return _full_svd(w, t)
    return _randomized_svd(w, t)


def svd_of_product(f, g, t: int) -> SvdTriple:
    """Top-t SVD of the product ``f @ g`` without materializing it.

    QR-factors both sides and decomposes the small core, so the cost is
    O((d + k) r^2) for inner dimension r. Exact to roundoff, which makes it
    the right tool for LoRA updates where the factors are the ground truth.
    """
    f = as_matrix(f, "f")
    g = as_matrix(g, "g")
    if f.shape[1] != g.shape[0]:
        raise ValidationError(
            f"inner dimensions do not match: {f.shape} x {g.shape}"
        )
    d, _ = f.shape
    k = g.shape[1]
    if not 1 <= t <= min(d, k):
        raise ValidationError(
            f"truncation rank {t} out of range for product shape {(d, k)}"
        )
    qf, rf = np.linalg.qr(f)
    qg, rg = np.linalg.qr(g.T)
    core = rf @ rg.T
    try:
        uc, s, vtc = np.linalg.svd(core, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"core SVD did not converge: {exc}") from exc
    tt = min(t, len(s))
    u = qf @ uc[:, :tt]
    v = qg @ vtc[:tt].T
    if tt < t:
        # Inner dimension was below t; pad with zero singular values and
        # orthonormal completions so the triple keeps its promised width.
        u = _complete_orthonormal(u, t)
        v = _complete_orthonormal(v, t)
        s = np.concatenate([s[:tt], np.zeros(t - tt)])
    else:
        s = s[:tt]
    u, v = _fix_signs(u, v)
    return SvdTriple(u=u, s=np.maximum(s, 0.0), v=v)


def _complete_orthonormal(u: np.ndarray, t: int) -> np.ndarray:
    """Extend orthonormal columns of ``u`` to width t with basis vectors."""
    d, have = u.shape
    cols = [u]
    need = t - have
    basis = np.eye(d)
    for e in basis.T:
        if need == 0:
            break
        cur = np.hstack(cols)
        resid = e - cur @ (cur.T @ e)
        nrm = np.linalg.norm(resid)
        if nrm > 1e-8:
            cols.append((resid / nrm)[:, None])
            need -= 1
    return np.hstack(cols)
