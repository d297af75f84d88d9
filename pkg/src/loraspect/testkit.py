"""Independent oracles and seeded synthetic generators.

Everything here deliberately avoids the decomposition routines in
:mod:`loraspect.linalg` so that agreement between the two is evidence rather
than tautology. Randomness always flows through numpy's Philox generator, a
counter-based PRNG whose streams are reproducible across platforms from the
seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError
from .linalg import SvdTriple, _fix_signs, as_matrix

_JACOBI_MAX_SWEEPS = 60
_JACOBI_TOL = 1e-14


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for (seed, stream); the canonical RNG for fixtures."""
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def oracle_full_svd(w) -> SvdTriple:
    """Full SVD by one-sided Jacobi rotations.

    Iteratively orthogonalizes the columns of the (possibly transposed)
    input with cyclic 2x2 rotations until every pair is orthogonal to
    machine precision. Small instances only; the point is an independent
    cross-check, not speed.
    """
    w = as_matrix(w)
    d, k = w.shape
    if min(d, k) > 64:
        raise ValidationError("oracle_full_svd is limited to min(d, k) <= 64")

    transposed = d < k
    g = (w.T if transposed else w).copy()
    m, n = g.shape
    v = np.eye(n)

    scale = np.linalg.norm(g)
    if scale == 0.0:
        u = _orthonormal_completion(np.zeros((m, 0)), n, m)
        return SvdTriple(u=np.eye(k, k) if transposed else u,
                         s=np.zeros(n),
                         v=(u if transposed else np.eye(n)))

    converged = False
    off = np.inf
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = g[:, p] @ g[:, p]
                beta = g[:, q] @ g[:, q]
                gamma = g[:, p] @ g[:, q]
                if alpha == 0.0 or beta == 0.0:
                    continue
                off = max(off, abs(gamma) / np.sqrt(alpha * beta))
                if abs(gamma) <= _JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                gp = g[:, p].copy()
                g[:, p] = c * gp - s * g[:, q]
                g[:, q] = s * gp + c * g[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if off <= _JACOBI_TOL:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"Jacobi sweeps exhausted with off-diagonal residual {off:.3e}",
            residual=off,
        )

    norms = np.linalg.norm(g, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    g = g[:, order]
    v = v[:, order]
    u = np.zeros((m, n))
    nz = norms > 0
    u[:, nz] = g[:, nz] / norms[nz]
    u = _orthonormal_completion(u[:, nz], n, m)

    if transposed:
        u, v = v, u
    u, v = _fix_signs(u, v)
    triple = SvdTriple(u=u, s=norms, v=v)
    _check_reconstruction(w, triple, scale)
    return triple


def _orthonormal_completion(cols: np.ndarray, want: int, dim: int) -> np.ndarray:
    out = [cols] if cols.shape[1] else []
    have = cols.shape[1]
    for e in np.eye(dim).T:
        if have == want:
            break
        cur = np.hstack(out) if out else np.zeros((dim, 0))
        r = e - cur @ (cur.T @ e)
        nrm = np.linalg.norm(r)
        if nrm > 1e-8:
            out.append((r / nrm)[:, None])
            have += 1
    return np.hstack(out)


def _check_reconstruction(w, triple, scale):
    recon = triple.u @ np.diag(triple.s) @ triple.v.T
    resid = np.linalg.norm(w - recon) / scale
    if resid > 1e-10:
        raise ConvergenceError(
            f"oracle self-check failed: reconstruction residual {resid:.3e}",
            residual=resid,
        )


def weighted_median_oracle(ratios, weights) -> float:
    """Minimize sum_i w_i |r_i - d| by brute force over every breakpoint.

    Quadratic cost; returns the lowest minimizing breakpoint on ties.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if ratios.shape != weights.shape or ratios.ndim != 1:
        raise ValidationError("ratios and weights must be equal-length 1-D")
    if len(ratios) == 0:
        raise ValidationError("empty instance")
    if np.any(weights < 0):
        raise ValidationError("weights must be nonnegative")
    if weights.sum() == 0:
        raise ValidationError("all weights are zero")
    objective = np.array([np.sum(weights * np.abs(ratios - d)) for d in ratios])
    best = objective.min()
    return float(ratios[objective == best].min())


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted low-rank matrix with optional outlier corruption."""

    rows: int
    cols: int
    planted_rank: int
    singular_value_profile: tuple[float, ...]
    outlier_fraction: float = 0.0
    outlier_magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.planted_rank > min(self.rows, self.cols):
            raise ValidationError("planted_rank exceeds min(rows, cols)")
        if len(self.singular_value_profile) != self.planted_rank:
            raise ValidationError("profile length must equal planted_rank")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ValidationError("outlier_fraction must be in [0, 1]")


def planted_factors(spec: SyntheticSpec):
    """Seeded orthonormal (U, V) plus the profile, before any corruption."""
    rng = rng_for(spec.seed, stream=1)
    u, _ = np.linalg.qr(rng.standard_normal((spec.rows, spec.planted_rank)))
    v, _ = np.linalg.qr(rng.standard_normal((spec.cols, spec.planted_rank)))
    s = np.asarray(spec.singular_value_profile, dtype=np.float64)
    return u, s, v


def synth_matrix(spec: SyntheticSpec) -> np.ndarray:
    """Materialize the planted matrix and overwrite seeded outlier entries."""
    u, s, v = planted_factors(spec)
    w = (u * s) @ v.T
    n_out = int(round(spec.outlier_fraction * spec.rows * spec.cols))
    if n_out > 0:
        rng = rng_for(spec.seed, stream=2)
        flat = rng.choice(spec.rows * spec.cols, size=n_out, replace=False)
        signs = rng.choice([-1.0, 1.0], size=n_out)
        peak = max(s.max(initial=0.0), 0.0)
        w.flat[np.sort(flat)] = 0.0  # positions are overwritten, not added to
        w.flat[flat] = signs * spec.outlier_magnitude * peak
    return w


def sharpness_profiles(n_layers: int, rank: int, lo: float = 0.3, hi: float = 0.95):
    """Per-layer singular profiles whose planted sharpness rises linearly.

    Layer i gets top value 1 and equal tail values chosen so that
    sigma_1 / sum(sigma) lands on the i-th point of [lo, hi].
    """
    if not 0 < lo <= hi < 1:
        raise ValidationError("need 0 < lo <= hi < 1")
    targets = np.linspace(lo, hi, n_layers)
    profiles = []
    for t in targets:
        if rank == 1:
            profiles.append((1.0,))
            continue
        tail = (1.0 / t - 1.0) / (rank - 1)
        profiles.append(tuple([1.0] + [tail] * (rank - 1)))
    return profiles


def factor_pair_for_profile(dims, rank, profile, rng):
    """A (d x r, r x k) factor pair whose product has the planted spectrum."""
    d, k = dims
    u, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    v, _ = np.linalg.qr(rng.standard_normal((k, rank)))
    s = np.asarray(profile, dtype=np.float64)
    if len(s) < rank:
        s = np.concatenate([s, np.zeros(rank - len(s))])
    root = np.sqrt(s)
    return u * root, (v * root).T


@dataclass
class AdapterRecipe:
    """Layer layout for a synthetic adapter checkpoint."""

    num_blocks: int
    dims: tuple[int, int]
    rank: int
    profiles: list = field(default_factory=list)
    modules: tuple[str, ...] = ("q_proj", "k_proj", "v_proj", "o_proj")
    lora_alpha: float | None = None  # defaults to rank, i.e. scaling 1.0
    seed: int = 0
    dtype: str = "F32"


def synth_adapter(recipe: AdapterRecipe, directory):
    """Write a synthetic PEFT-style adapter checkpoint and config to disk.

    Returns the checkpoint path. Layer (block b, module m) gets the
    recipe profile at index b * len(modules) + m; a short profile list is
    cycled. Exercises the real file path end to end.
    """
    from . import adapter_io

    d, k = recipe.dims
    n_layers = recipe.num_blocks * len(recipe.modules)
    profiles = recipe.profiles or [tuple([1.0] * recipe.rank)]
    tensors = {}
    for b in range(recipe.num_blocks):
        for mi, mod in enumerate(recipe.modules):
            idx = b * len(recipe.modules) + mi
            profile = profiles[idx % len(profiles)]
            rng = rng_for(recipe.seed, stream=1000 + idx)
            a_fac, b_fac = factor_pair_for_profile((d, k), recipe.rank, profile, rng)
            # PEFT layout: lora_A is (r x in), lora_B is (out x r);
            # delta = lora_B @ lora_A.
            prefix = f"base_model.model.model.layers.{b}.self_attn.{mod}"
            tensors[f"{prefix}.lora_A.weight"] = _store(b_fac, recipe.dtype)
            tensors[f"{prefix}.lora_B.weight"] = _store(a_fac, recipe.dtype)

    import json
    import pathlib

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ckpt = directory / "adapter_model.safetensors"
    adapter_io.write_safetensors(tensors, ckpt)
    alpha = recipe.lora_alpha if recipe.lora_alpha is not None else recipe.rank
    config = {
        "r": recipe.rank,
        "lora_alpha": alpha,
        "target_modules": list(recipe.modules),
        "peft_type": "LORA",
    }
    (directory / "adapter_config.json").write_text(json.dumps(config, indent=2))
    assert len(tensors) == 2 * n_layers
    return ckpt


def _store(array: np.ndarray, dtype: str):
    from . import adapter_io

    return adapter_io.TensorPayload.from_array(array, dtype)


def direction_alignment(u_true, v_true, u_got, v_got, t: int) -> float:
    """Mean absolute cosine between matched planted and recovered directions."""
    total = 0.0
    for j in range(t):
        total += abs(float(u_true[:, j] @ u_got[:, j]))
        total += abs(float(v_true[:, j] @ v_got[:, j]))
    return total / (2 * t)
