"""Compiled kernels for the robust L1 fit on large matrices.

The hot problem: each deflation step must, for every candidate direction
pair, solve an exact weighted-median fit over all d*k entry ratios and then
evaluate the full L1 selection objective. Done naively that is hundreds of
sorted passes over the matrix per layer.

Nothing here sorts the full data. A strided sample places three probe
values around each pair's median; one branch-free pass then accumulates,
for all pairs at once, exact one-sided sums at every probe. Those sums give
the exact L1 objective and subgradient at each probe, which bounds every
pair's optimum tightly from both sides. Pairs that could still win get an
exact finish: the probe pass already fixed the exact per-block entry counts
inside the bracketing segment, so a collection pass gathers just those
entries and the weighted median plus exact objective follow from partial
sums. Selection is exact; sample quality only affects speed.

Pairs that can contain below-floor weights, or whose median escapes the
sampled probes, fall back to a window-walking resolver and, as a last
resort, a fully materialized fit.

All parallel work is split over a fixed number of row blocks whose partial
results merge in block order, so results do not depend on thread schedule.
"""

from __future__ import annotations

import numpy as np

from .masvd_common import WEIGHT_FLOOR

try:  # pragma: no cover - exercised implicitly by dispatch tests
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

N_BLOCKS = 16
_SAMPLE_SIDE = 128
_MAX_ROUNDS = 60
_COLLECT_CAP = 4_000_000

# Relative slack on probe objectives when used as bounds; covers the
# reassociation slop the vectorized accumulations introduce.
_BOUND_SLACK = 3e-8


def have_kernels() -> bool:
    return _HAVE_NUMBA


if _HAVE_NUMBA:

    @njit(parallel=True, fastmath=True, boundscheck=False, cache=True)
    def _probe3(R, invU, wU, invV, wV, P, acc, cnt):
        """Exact one-sided sums at three probe values for every pair.

        acc[blk, a, c] = (W_le(p0), WR_le(p0), W_le(p1), WR_le(p1),
        W_le(p2), WR_le(p2), T, WR_tot); cnt[blk, a, c] = entry counts at
        or below each probe. Weights at or below the floor are treated as
        absent (callers exclude such pairs beforehand).
        """
        d, k = R.shape
        mL = invU.shape[0]
        mR = invV.shape[0]
        rows_per = (d + N_BLOCKS - 1) // N_BLOCKS
        for blk in prange(N_BLOCKS):
            r0 = blk * rows_per
            r1 = min(d, r0 + rows_per)
            loc = np.zeros((mL, mR, 8))
            loc_n = np.zeros((mL, mR, 3))
            tmp = np.empty(k)
            for i in range(r0, r1):
                for a in range(mL):
                    iu = invU[a, i]
                    wa = wU[a, i]
                    for j in range(k):
                        tmp[j] = R[i, j] * iu
                    for c in range(mR):
                        p0 = P[a, c, 0]
                        p1 = P[a, c, 1]
                        p2 = P[a, c, 2]
                        w_le0 = 0.0
                        wr_le0 = 0.0
                        w_le1 = 0.0
                        wr_le1 = 0.0
                        w_le2 = 0.0
                        wr_le2 = 0.0
                        t_w = 0.0
                        wr_t = 0.0
                        n0 = 0.0
                        n1 = 0.0
                        n2 = 0.0
                        for j in range(k):
                            rho = tmp[j] * invV[c, j]
                            w = wa * wV[c, j]
                            wr = w * rho
                            t_w += w
                            wr_t += wr
                            le0 = rho <= p0
                            le1 = rho <= p1
                            le2 = rho <= p2
                            w_le0 += w if le0 else 0.0
                            wr_le0 += wr if le0 else 0.0
                            w_le1 += w if le1 else 0.0
                            wr_le1 += wr if le1 else 0.0
                            w_le2 += w if le2 else 0.0
                            wr_le2 += wr if le2 else 0.0
                            n0 += 1.0 if le0 else 0.0
                            n1 += 1.0 if le1 else 0.0
                            n2 += 1.0 if le2 else 0.0
                        loc[a, c, 0] += w_le0
                        loc[a, c, 1] += wr_le0
                        loc[a, c, 2] += w_le1
                        loc[a, c, 3] += wr_le1
                        loc[a, c, 4] += w_le2
                        loc[a, c, 5] += wr_le2
                        loc[a, c, 6] += t_w
                        loc[a, c, 7] += wr_t
                        loc_n[a, c, 0] += n0
                        loc_n[a, c, 1] += n1
                        loc_n[a, c, 2] += n2
            acc[blk] = loc
            cnt[blk] = loc_n

    @njit(parallel=True, fastmath=False, boundscheck=False, cache=True)
    def _pair_collect(R, invu, wu, invv, wv, lo, hi, offsets, out_val, out_w):
        """Gather (rho, w) for entries with lo < rho <= hi for one pair.

        ``offsets[blk]`` is the exact write start per block, precomputed
        from the probe-pass counts, so the output layout is deterministic.
        """
        d, k = R.shape
        rows_per = (d + N_BLOCKS - 1) // N_BLOCKS
        for blk in prange(N_BLOCKS):
            r0 = blk * rows_per
            r1 = min(d, r0 + rows_per)
            pos = offsets[blk]
            for i in range(r0, r1):
                iu = invu[i]
                wui = wu[i]
                for j in range(k):
                    w = wui * wv[j]
                    if w > WEIGHT_FLOOR:
                        rho = (R[i, j] * iu) * invv[j]
                        if lo < rho <= hi:
                            out_val[pos] = rho
                            out_w[pos] = w
                            pos += 1

    @njit(parallel=True, fastmath=True, boundscheck=False, cache=True)
    def _pair_scan(R, u, v, invu, wu, invv, wv, a, b,
                   win_val, win_w, win_cap, fl_r, fl_o, fl_cap, out):
        """Exact partial sums for one pair with entry collection in [a, b].

        out[blk] = (W_lt, WR_lt, W_gt, WR_gt, W_win, n_win, n_fl, 0).
        In-window (rho, w) pairs land at blk*win_cap; floored entries
        record (R_ij, u_i*v_j). Counts keep growing past the caps so
        overflow is detectable.
        """
        d, k = R.shape
        rows_per = (d + N_BLOCKS - 1) // N_BLOCKS
        for blk in prange(N_BLOCKS):
            r0 = blk * rows_per
            r1 = min(d, r0 + rows_per)
            w_lt = 0.0
            wr_lt = 0.0
            w_gt = 0.0
            wr_gt = 0.0
            w_win = 0.0
            n_win = 0
            n_fl = 0
            wbase = blk * win_cap
            fbase = blk * fl_cap
            for i in range(r0, r1):
                iu = invu[i]
                wui = wu[i]
                ui = u[i]
                for j in range(k):
                    w = wui * wv[j]
                    if w > WEIGHT_FLOOR:
                        rho = (R[i, j] * iu) * invv[j]
                        if rho < a:
                            w_lt += w
                            wr_lt += w * rho
                        elif rho > b:
                            w_gt += w
                            wr_gt += w * rho
                        else:
                            if n_win < win_cap:
                                win_val[wbase + n_win] = rho
                                win_w[wbase + n_win] = w
                            n_win += 1
                            w_win += w
                    else:
                        if n_fl < fl_cap:
                            fl_r[fbase + n_fl] = R[i, j]
                            fl_o[fbase + n_fl] = ui * v[j]
                        n_fl += 1
            out[blk, 0] = w_lt
            out[blk, 1] = wr_lt
            out[blk, 2] = w_gt
            out[blk, 3] = wr_gt
            out[blk, 4] = w_win
            out[blk, 5] = n_win
            out[blk, 6] = n_fl
            out[blk, 7] = 0.0

    @njit(parallel=True, fastmath=True, boundscheck=False, cache=True)
    def _tie_scan(R, u, v, invu, wu, invv, wv, m, fl_r, fl_o, fl_cap, out):
        """Exact mass strictly below / at / above the single value m."""
        d, k = R.shape
        rows_per = (d + N_BLOCKS - 1) // N_BLOCKS
        for blk in prange(N_BLOCKS):
            r0 = blk * rows_per
            r1 = min(d, r0 + rows_per)
            w_lt = 0.0
            wr_lt = 0.0
            w_eq = 0.0
            w_gt = 0.0
            wr_gt = 0.0
            n_fl = 0
            fbase = blk * fl_cap
            for i in range(r0, r1):
                iu = invu[i]
                wui = wu[i]
                ui = u[i]
                for j in range(k):
                    w = wui * wv[j]
                    if w > WEIGHT_FLOOR:
                        rho = (R[i, j] * iu) * invv[j]
                        if rho < m:
                            w_lt += w
                            wr_lt += w * rho
                        elif rho > m:
                            w_gt += w
                            wr_gt += w * rho
                        else:
                            w_eq += w
                    else:
                        if n_fl < fl_cap:
                            fl_r[fbase + n_fl] = R[i, j]
                            fl_o[fbase + n_fl] = ui * v[j]
                        n_fl += 1
            out[blk, 0] = w_lt
            out[blk, 1] = wr_lt
            out[blk, 2] = w_eq
            out[blk, 3] = w_gt
            out[blk, 4] = wr_gt
            out[blk, 5] = n_fl

    @njit(parallel=True, fastmath=False, boundscheck=False, cache=True)
    def _deflate(R, L, d_star, u, v):
        d = R.shape[0]
        for i in prange(d):
            s = d_star * u[i]
            for j in range(R.shape[1]):
                step = s * v[j]
                R[i, j] -= step
                L[i, j] += step


def _sample_indices(n: int, side: int = _SAMPLE_SIDE) -> np.ndarray:
    stride = max(1, -(-n // side))
    return np.arange(0, n, stride)


def _weighted_sample_quantiles(rho, w, fracs):
    order = np.argsort(rho, kind="stable")
    rho = rho[order]
    cum = np.cumsum(w[order])
    total = cum[-1]
    out = []
    for f in fracs:
        j = int(np.searchsorted(cum, f * total, side="left"))
        out.append(float(rho[min(j, len(rho) - 1)]))
    return out


class _PairContext:
    """Precomputed per-pair vectors shared by the scan kernels."""

    def __init__(self, R, u, v):
        self.R = R
        self.u = np.ascontiguousarray(u)
        self.v = np.ascontiguousarray(v)
        with np.errstate(divide="ignore"):
            self.invu = 1.0 / self.u
            self.invv = 1.0 / self.v
        self.wu = np.abs(self.u)
        self.wv = np.abs(self.v)


def _sample_ratios(ctx: _PairContext, rows, cols):
    sub = ctx.R[np.ix_(rows, cols)]
    w = np.outer(ctx.wu[rows], ctx.wv[cols])
    valid = w > WEIGHT_FLOOR
    if not valid.any():
        return None, None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = (sub * ctx.invu[rows][:, None]) * ctx.invv[cols][None, :]
    return rho[valid], w[valid]


def _numpy_exact_fit(ctx: _PairContext):
    """Last-resort exact fit by full materialization (rare)."""
    w = np.outer(ctx.wu, ctx.wv)
    valid = w > WEIGHT_FLOOR
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = (ctx.R * ctx.invu[:, None]) * ctx.invv[None, :]
    rv = rho[valid]
    wv_ = w[valid]
    if len(rv) == 0 or wv_.sum() == 0.0:
        d_star = 0.0
    else:
        order = np.argsort(rv, kind="stable")
        cum = np.cumsum(wv_[order])
        j = int(np.searchsorted(cum, 0.5 * cum[-1], side="left"))
        d_star = float(rv[order][min(j, len(rv) - 1)])
    obj = float(np.abs(ctx.R - d_star * np.outer(ctx.u, ctx.v)).sum())
    return d_star, obj


def _resolve_pair(ctx: _PairContext, lo: float, hi: float):
    """Exact (d*, objective) for one pair by window walking.

    Scans [lo, hi]; when the half-mass crossing falls outside, the window
    shifts with geometric growth, and when it holds too many entries to
    collect, a tie-drain at the midpoint either resolves a mass point
    exactly or bisects. Falls back to the materialized fit on a blown
    round budget.
    """
    n = ctx.R.size
    win_cap = max(8192, (n // N_BLOCKS) // 8)
    fl_cap = max(4096, (n // N_BLOCKS) // 8)
    win_val = np.empty(N_BLOCKS * win_cap)
    win_w = np.empty(N_BLOCKS * win_cap)
    fl_r = np.empty(N_BLOCKS * fl_cap)
    fl_o = np.empty(N_BLOCKS * fl_cap)
    out = np.empty((N_BLOCKS, 8))
    tie_out = np.empty((N_BLOCKS, 6))

    span = max(hi - lo, abs(lo) * 1e-9, abs(hi) * 1e-9, 1e-300)
    grow = 1.0
    for _ in range(_MAX_ROUNDS):
        if not np.isfinite(lo) or not np.isfinite(hi):
            break
        if lo == hi:
            status, result = _try_tie(ctx, lo, fl_r, fl_o, fl_cap, tie_out)
            if status == "done":
                return result
            if status == "fallback":
                break
            grow *= 8.0
            if status == "left":
                lo, hi = lo - span * grow, np.nextafter(lo, -np.inf)
            else:
                lo, hi = np.nextafter(hi, np.inf), hi + span * grow
            continue

        _pair_scan(ctx.R, ctx.u, ctx.v, ctx.invu, ctx.wu, ctx.invv, ctx.wv,
                   lo, hi, win_val, win_w, win_cap, fl_r, fl_o, fl_cap, out)
        w_lt = float(out[:, 0].sum())
        wr_lt = float(out[:, 1].sum())
        w_gt = float(out[:, 2].sum())
        wr_gt = float(out[:, 3].sum())
        w_win = float(out[:, 4].sum())
        if np.any(out[:, 6] > fl_cap):
            break
        total = w_lt + w_win + w_gt
        if total == 0.0:
            return 0.0, float(np.abs(ctx.R).sum())
        half = 0.5 * total
        if w_lt >= half:
            grow *= 8.0
            lo, hi = lo - span * grow, np.nextafter(lo, -np.inf)
            continue
        if w_lt + w_win < half:
            grow *= 8.0
            lo, hi = np.nextafter(hi, np.inf), hi + span * grow
            continue
        counts = out[:, 5].astype(np.int64)
        if np.any(counts > win_cap):
            mid = lo + 0.5 * (hi - lo)
            status, result = _try_tie(ctx, mid, fl_r, fl_o, fl_cap, tie_out)
            if status == "done":
                return result
            if status == "fallback":
                break
            if status == "left":
                hi = np.nextafter(mid, -np.inf)
            else:
                lo = np.nextafter(mid, np.inf)
            if hi < lo:
                lo = hi
            continue
        vals, ws = _gather_blocks(win_val, win_w, counts, win_cap)
        d_star, obj_inner = _median_and_split(vals, ws, w_lt, wr_lt, w_gt, wr_gt, half)
        obj = obj_inner + _floored_term(out[:, 6], fl_r, fl_o, fl_cap, d_star)
        return d_star, float(obj)
    return _numpy_exact_fit(ctx)


def _median_and_split(vals, ws, w_lt, wr_lt, w_gt, wr_gt, half):
    """Exact lower weighted median of the collected window entries plus
    the exact objective value from outer partial sums."""
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    ws = ws[order]
    cum = w_lt + np.cumsum(ws)
    j = int(np.searchsorted(cum, half, side="left"))
    if j >= len(vals):
        j = len(vals) - 1
    d_star = float(vals[j])
    below = vals < d_star
    above = vals > d_star
    obj = (d_star * (w_lt + ws[below].sum())
           - (wr_lt + (ws[below] * vals[below]).sum()))
    obj += ((wr_gt + (ws[above] * vals[above]).sum())
            - d_star * (w_gt + ws[above].sum()))
    return d_star, obj


def _try_tie(ctx: _PairContext, m: float, fl_r, fl_o, fl_cap, tie_out):
    """Tie-drain at value m: resolve exactly if m is the lower weighted
    median, otherwise report which side holds the crossing."""
    _tie_scan(ctx.R, ctx.u, ctx.v, ctx.invu, ctx.wu, ctx.invv, ctx.wv,
              m, fl_r, fl_o, fl_cap, tie_out)
    if np.any(tie_out[:, 5] > fl_cap):
        return "fallback", None
    w_lt = float(tie_out[:, 0].sum())
    wr_lt = float(tie_out[:, 1].sum())
    w_eq = float(tie_out[:, 2].sum())
    w_gt = float(tie_out[:, 3].sum())
    wr_gt = float(tie_out[:, 4].sum())
    total = w_lt + w_eq + w_gt
    if total == 0.0:
        return "done", (0.0, float(np.abs(ctx.R).sum()))
    half = 0.5 * total
    if w_lt < half <= w_lt + w_eq:
        obj = (m * w_lt - wr_lt) + (wr_gt - m * w_gt)
        obj += _floored_term(tie_out[:, 5], fl_r, fl_o, fl_cap, m)
        return "done", (m, float(obj))
    if w_lt >= half:
        return "left", None
    return "right", None


def _gather_blocks(val_buf, w_buf, counts, cap):
    parts_v = []
    parts_w = []
    for blk in range(N_BLOCKS):
        c = int(counts[blk])
        parts_v.append(val_buf[blk * cap: blk * cap + c])
        parts_w.append(w_buf[blk * cap: blk * cap + c])
    return np.concatenate(parts_v), np.concatenate(parts_w)


def _floored_term(counts, fl_r, fl_o, cap, d_star):
    total = 0.0
    for blk in range(N_BLOCKS):
        c = int(counts[blk])
        if c:
            r = fl_r[blk * cap: blk * cap + c]
            o = fl_o[blk * cap: blk * cap + c]
            total += float(np.abs(r - d_star * o).sum())
    return total


def exact_pair_fit(R, u, v):
    """Exact weighted-median fit and L1 objective for one direction pair."""
    ctx = _PairContext(np.ascontiguousarray(R), u, v)
    rows = _sample_indices(R.shape[0])
    cols = _sample_indices(R.shape[1])
    rho, w = _sample_ratios(ctx, rows, cols)
    if rho is None:
        return 0.0, float(np.abs(R).sum())
    lo, hi = _weighted_sample_quantiles(rho, w, (0.49, 0.51))
    return _resolve_pair(ctx, lo, hi)


def select_component(R, left, right):
    """One exact deflation-step selection over all candidate pairs.

    Returns (left index, right index, d*, objective) for the pair whose
    optimal rank-1 subtraction minimizes the full L1 objective, ties broken
    by ascending indices.
    """
    R = np.ascontiguousarray(R)
    d, k = R.shape
    mL = left.shape[1]
    mR = right.shape[1]
    with np.errstate(divide="ignore"):
        invU = np.ascontiguousarray((1.0 / left).T)
        invV = np.ascontiguousarray((1.0 / right).T)
    wU = np.ascontiguousarray(np.abs(left).T)
    wV = np.ascontiguousarray(np.abs(right).T)

    # Pairs that can hold sub-floor weights need the floored-entry
    # machinery of the walking resolver; everyone else takes the fast lane.
    min_wu = wU.min(axis=1)
    min_wv = wV.min(axis=1)

    rows = _sample_indices(d)
    cols = _sample_indices(k)
    probes = np.zeros((mL, mR, 3))
    walkers = {}  # (a, c) -> seed window for _resolve_pair
    contexts = {}
    for a in range(mL):
        for c in range(mR):
            ctx = _PairContext(R, left[:, a], right[:, c])
            contexts[a, c] = ctx
            rho, w = _sample_ratios(ctx, rows, cols)
            if rho is None:
                walkers[a, c] = (0.0, 0.0)
            elif min_wu[a] * min_wv[c] <= WEIGHT_FLOOR:
                q = _weighted_sample_quantiles(rho, w, (0.49, 0.51))
                walkers[a, c] = (q[0], q[1])
            else:
                q = _weighted_sample_quantiles(rho, w, (0.494, 0.5, 0.506))
                probes[a, c] = q

    acc = np.empty((N_BLOCKS, mL, mR, 8))
    cnt = np.empty((N_BLOCKS, mL, mR, 3))
    _probe3(R, invU, wU, invV, wV, probes, acc, cnt)
    sums = acc.sum(axis=0)  # fixed block order

    abs_r_sum = None
    lb = np.full((mL, mR), 0.0)
    ub = np.full((mL, mR), np.inf)
    segments = {}
    for a in range(mL):
        for c in range(mR):
            if (a, c) in walkers:
                continue
            w_le = sums[a, c, 0:6:2]
            wr_le = sums[a, c, 1:6:2]
            t_w = sums[a, c, 6]
            wr_t = sums[a, c, 7]
            if t_w == 0.0:
                if abs_r_sum is None:
                    abs_r_sum = float(np.abs(R).sum())
                segments[a, c] = (0.0, abs_r_sum, None)
                lb[a, c] = ub[a, c] = abs_r_sum
                continue
            p = probes[a, c]
            obj_p = p * (2.0 * w_le - t_w) - (2.0 * wr_le - wr_t)
            slope_p = 2.0 * w_le - t_w
            half = 0.5 * t_w
            marg = _BOUND_SLACK * (t_w * np.abs(p).max() + abs(wr_t)
                                   + np.abs(wr_le).max()) + 1e-300
            ub[a, c] = obj_p.min() + marg
            # locate the probe segment holding the half-mass crossing
            if w_le[0] >= half:
                walkers[a, c] = (p[0], p[0])
                continue
            if w_le[2] < half:
                walkers[a, c] = (p[2], p[2])
                continue
            seg = 0 if w_le[1] >= half else 1
            segments[a, c] = None  # filled below
            lo_i, hi_i = seg, seg + 1
            if slope_p[lo_i] < 0.0 and slope_p[hi_i] > 0.0:
                x = ((obj_p[hi_i] - obj_p[lo_i] + slope_p[lo_i] * p[lo_i]
                      - slope_p[hi_i] * p[hi_i])
                     / (slope_p[lo_i] - slope_p[hi_i]))
                lbw = obj_p[lo_i] + slope_p[lo_i] * (x - p[lo_i])
                lb[a, c] = max(lbw - marg, 0.0)
            else:
                lb[a, c] = max(max(obj_p[lo_i], obj_p[hi_i])
                               - (p[hi_i] - p[lo_i]) * t_w - marg, 0.0)
            segments[a, c] = (lo_i, hi_i, half)

    min_ub = ub.min()
    best = None
    for a in range(mL):
        for c in range(mR):
            if lb[a, c] > min_ub:
                continue
            seg = segments.get((a, c))
            if seg is not None and seg[2] is None:
                d_star, obj = seg[0], seg[1]  # zero-weight pair
            elif (a, c) in walkers:
                lo, hi = walkers[a, c]
                d_star, obj = _resolve_pair(contexts[a, c], lo, hi)
            else:
                d_star, obj = _finish_from_segment(
                    contexts[a, c], probes[a, c], sums[a, c],
                    cnt[:, a, c, :], seg)
            if best is None or obj < best[3]:
                best = (a, c, d_star, obj)
    return best


def _finish_from_segment(ctx, p, sums, cnt_blocks, seg):
    """Exact finish for a pair whose crossing lies between two probes:
    collect exactly the entries in (p_lo, p_hi] and split at the median."""
    lo_i, hi_i, half = seg
    lo_v, hi_v = float(p[lo_i]), float(p[hi_i])
    n_blk = (cnt_blocks[:, hi_i] - cnt_blocks[:, lo_i]).astype(np.int64)
    n_tot = int(n_blk.sum())
    if n_tot > _COLLECT_CAP or n_tot == 0:
        return _resolve_pair(ctx, lo_v, hi_v)
    offsets = np.zeros(N_BLOCKS, dtype=np.int64)
    np.cumsum(n_blk[:-1], out=offsets[1:])
    vals = np.empty(n_tot)
    ws = np.empty(n_tot)
    _pair_collect(ctx.R, ctx.invu, ctx.wu, ctx.invv, ctx.wv,
                  lo_v, hi_v, offsets, vals, ws)
    w_le_lo = sums[2 * lo_i]
    wr_le_lo = sums[2 * lo_i + 1]
    w_le_hi = sums[2 * hi_i]
    wr_le_hi = sums[2 * hi_i + 1]
    t_w = sums[6]
    wr_t = sums[7]
    w_gt = t_w - w_le_hi
    wr_gt = wr_t - wr_le_hi
    return _median_and_split(vals, ws, w_le_lo, wr_le_lo, w_gt, wr_gt, half)


def deflate(R, L, d_star, u, v):
    """In-place R -= d* u v^T and L += d* u v^T."""
    _deflate(R, L, d_star, np.ascontiguousarray(u), np.ascontiguousarray(v))
