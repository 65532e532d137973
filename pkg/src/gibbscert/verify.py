"""Monte Carlo verification harness.

Runs replicated coupled trajectories, checks every proven pathwise
inequality on every step, estimates total variation by one-shot coupling,
and verifies the probabilistic ingredients (drift conditions, stopping-time
contraction, excursion counts) at desk scale.

Reproducibility contract: replicas are processed in fixed-size chunks and
chunk ``i`` always draws from ``RngStream(seed, stream_id=i + offset)``, so
results are bit-identical across runs and across worker counts; workers only
execute independent chunks, and aggregation is ordered by chunk index.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special as sp

from .bounds import BoundSpec, evaluate_bound
from .chain import ModelParams, block_shapes, draw_block, step_n3
from .constants import ConstantsTable, compute_constants, ratio_expectation_closed_form
from .coupling import envelope_init, reduced_rates
from .gamma import gamma_tv
from .ratio_drift import assert_pathwise, check_pathwise, init_record, ratio_step
from .rng import RngStream

__all__ = [
    "McConfig",
    "McReport",
    "ReplicaStats",
    "run_replicas",
    "TvEstimate",
    "estimate_tv_by_coupling",
    "verify_drift_mc",
    "history_states",
    "stopped_states",
    "one_shot_ratio_bound_mc",
    "stopping_time_mc",
    "moment_identity_mc",
    "verify_inequality_suite",
    "verify_auxiliary_math",
    "verify_suite",
    "tv_grid_reports",
    "default_drift_states",
    "trajectory",
    "N3_TRAJECTORY_COLUMNS",
]

VISIT_TMAX = 20


@dataclass
class McConfig:
    """Sizing and seeding for the Monte Carlo experiments."""

    n_replicas: int = 10_000
    horizon: int = 1_000
    seed: int = 20_240_801
    confidence_sigmas: float = 3.0
    workers: Optional[int] = None
    chunk_size: int = 8_192

    def __post_init__(self):
        if self.n_replicas < 100:
            raise ValueError("n_replicas must be at least 100 for CI-based checks")


@dataclass
class McReport:
    """One verification result: estimate vs one-sided theoretical target."""

    name: str
    estimate: float
    ci_halfwidth: float
    target: float
    passed: bool
    n: int
    runtime_s: float
    note: str = ""
    extra: dict = field(default_factory=dict)

    @staticmethod
    def one_sided(name, estimate, se, target, sigmas, n, runtime_s, note="", extra=None):
        half = sigmas * se
        return McReport(
            name=name, estimate=float(estimate), ci_halfwidth=float(half),
            target=float(target), passed=bool(estimate <= target + half),
            n=int(n), runtime_s=float(runtime_s), note=note, extra=extra or {},
        )


def _chunks(n, chunk_size):
    sizes = []
    done = 0
    while done < n:
        m = min(chunk_size, n - done)
        sizes.append(m)
        done += m
    return sizes


def _run_chunked(fn, n, cfg: McConfig, stream_offset=0):
    """Run ``fn(chunk_id, size)`` over fixed chunks; results in chunk order."""
    sizes = _chunks(n, cfg.chunk_size)
    workers = cfg.workers or 1
    if workers <= 1 or len(sizes) <= 1:
        return [fn(i + stream_offset, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i + stream_offset, m) for i, m in enumerate(sizes)]
        return [f.result() for f in futures]


def _broadcast_state(s, m):
    return tuple(np.full(m, float(c)) for c in s)


# ---------------------------------------------------------------------------
# replica sweeps with pathwise checking


@dataclass
class ReplicaStats:
    """Aggregates over replicated coupled trajectories."""

    n: int
    horizon: int
    r0: float
    j0: float
    eta: float
    mean_ratio: np.ndarray        # E[R_t], t = 0..horizon
    se_ratio: np.ndarray
    visits_hist: np.ndarray         # counts of |S_bar_t| = k for t, k <= VISIT_TMAX
    violations: int = 0

    @property
    def mean_ratio_minus_1(self):
        return self.mean_ratio - 1.0


def run_replicas(p: ModelParams, U0, W0, cfg: McConfig, table: Optional[ConstantsTable] = None) -> ReplicaStats:
    """Run the coupled ratio process over replicas, checking every step.

    Aborts (raises :class:`PathwiseViolation`) if any proven inequality fails
    beyond the floating-point slack on any step of any replica.  For n = 3
    the pair is coupled directly (the ratio needs no auxiliary process) and
    the scalar-chain inequalities are checked instead.
    """
    table = table or compute_constants(p)
    if p.n == 3:
        return _run_replicas_n3(p, U0, W0, cfg, table)
    eta = table.eta
    env = envelope_init(U0, W0)
    horizon = cfg.horizon

    def chunk_fn(chunk_id, m):
        rng = RngStream(cfg.seed, stream_id=chunk_id)
        rec = init_record(_broadcast_state(U0, m), _broadcast_state(W0, m))
        s1 = np.zeros(horizon + 1)
        s2 = np.zeros(horizon + 1)
        s1[0] = np.sum(rec.ratio)
        s2[0] = np.sum(np.square(rec.ratio))
        cum = np.zeros(m, dtype=np.int64)
        hist = np.zeros((VISIT_TMAX + 1, VISIT_TMAX + 2), dtype=np.int64)
        for t in range(1, horizon + 1):
            block = draw_block(p, rng, t=t, size=m)
            nxt = ratio_step(rec, block, p)
            assert_pathwise(check_pathwise(rec, nxt, block, p), rec, nxt)
            s1[t] = np.sum(nxt.ratio)
            s2[t] = np.sum(np.square(nxt.ratio))
            if t <= VISIT_TMAX:
                cum += (nxt.j <= eta)
                hist[t] += np.bincount(cum, minlength=VISIT_TMAX + 2)
            rec = nxt
        return s1, s2, hist

    parts = _run_chunked(chunk_fn, cfg.n_replicas, cfg)
    s1 = sum(part[0] for part in parts)
    s2 = sum(part[1] for part in parts)
    hist = sum(part[2] for part in parts)
    n = cfg.n_replicas
    mean = s1 / n
    var = np.maximum(s2 / n - mean ** 2, 0.0)
    se = np.sqrt(var / n)
    return ReplicaStats(
        n=n, horizon=horizon, r0=float(env.r0), j0=float(env.j0), eta=float(eta),
        mean_ratio=mean, se_ratio=se, visits_hist=hist, violations=0,
    )


def _run_replicas_n3(p: ModelParams, U0, W0, cfg: McConfig, table: ConstantsTable) -> ReplicaStats:
    """Scalar-chain coupled sweep: direct ratio, order/ratio/drift checks each step."""
    from .ratio_drift import REL_SLACK, PathwiseViolation

    eta = table.eta
    m0 = min(float(U0), float(W0))
    M0 = max(float(U0), float(W0))
    if m0 <= 0:
        raise ValueError("states must be strictly positive")
    horizon = cfg.horizon
    shapes = block_shapes(p)

    def chunk_fn(chunk_id, m):
        rng = RngStream(cfg.seed, stream_id=chunk_id)
        u = np.full(m, m0)
        w = np.full(m, M0)
        ratio = w / u
        s1 = np.zeros(horizon + 1)
        s2 = np.zeros(horizon + 1)
        s1[0] = ratio.sum()
        s2[0] = np.square(ratio).sum()
        cum = np.zeros(m, dtype=np.int64)
        hist = np.zeros((VISIT_TMAX + 1, VISIT_TMAX + 2), dtype=np.int64)
        for t in range(1, horizon + 1):
            g1 = rng.gamma(shapes[0], size=m)
            g2 = rng.gamma(shapes[1], size=m)
            g3 = rng.gamma(shapes[2], size=m)
            u_next = g2 / (g1 / (u + p.x) + g3 / (u + p.b))
            w_next = g2 / (g1 / (w + p.x) + g3 / (w + p.b))
            ratio_next = w_next / u_next
            checks = {
                "order": u_next <= w_next,
                "ratio_contraction": ratio_next <= ratio * (1 + REL_SLACK),
                "sum_recursion": u_next <= (g2 / (g1 + g3)) * (u + p.x + p.b) * (1 + REL_SLACK),
                "inverse_bound": 1.0 / u_next <= (g1 / (g2 * p.x) + g3 / (g2 * p.b)) * (1 + REL_SLACK),
            }
            for name, ok in checks.items():
                if not np.all(ok):
                    idx = np.flatnonzero(~ok)[:5]
                    raise PathwiseViolation(
                        f"n=3 pathwise check {name} failed at t={t}: "
                        f"u={u[idx].tolist()}, w={w[idx].tolist()}, "
                        f"u'={u_next[idx].tolist()}, w'={w_next[idx].tolist()}")
            u, w, ratio = u_next, w_next, ratio_next
            s1[t] = ratio.sum()
            s2[t] = np.square(ratio).sum()
            if t <= VISIT_TMAX:
                cum += (u + 1.0 / u <= eta)
                hist[t] += np.bincount(cum, minlength=VISIT_TMAX + 2)
        return s1, s2, hist

    parts = _run_chunked(chunk_fn, cfg.n_replicas, cfg)
    s1 = sum(part[0] for part in parts)
    s2 = sum(part[1] for part in parts)
    hist = sum(part[2] for part in parts)
    n = cfg.n_replicas
    mean = s1 / n
    var = np.maximum(s2 / n - mean ** 2, 0.0)
    return ReplicaStats(
        n=n, horizon=horizon, r0=M0 / m0, j0=m0 + 1.0 / m0, eta=float(eta),
        mean_ratio=mean, se_ratio=np.sqrt(var / n), visits_hist=hist, violations=0,
    )


def trajectory(p: ModelParams, U0, W0, horizon: int, seed: int):
    """Single-replica coupled trajectory as a list of per-step row dicts.

    Columns follow the n = 4 record (t, u2, ..., D); for n = 3 the scalar
    analogue (t, u, w, R, K1, K2, J) is emitted.
    """
    if p.n == 3:
        return _trajectory_n3(p, U0, W0, horizon, seed)
    rng = RngStream(seed, stream_id=0)
    rec = init_record(tuple(map(float, U0)), tuple(map(float, W0)))
    rows = []

    def row(r):
        return {
            "t": r.t, "u2": float(r.u[0]), "u4": float(r.u[1]),
            "w2": float(r.w[0]), "w4": float(r.w[1]),
            "v2": float(r.v[0]), "v4": float(r.v[1]),
            "R": float(r.ratio), "Q": float(r.q), "K1": float(r.k1),
            "K2": float(r.k2), "J": float(r.j), "D": float(r.d),
        }

    rows.append(row(rec))
    for t in range(1, horizon + 1):
        block = draw_block(p, rng, t=t)
        rec = ratio_step(rec, block, p)
        rows.append(row(rec))
    return rows


N3_TRAJECTORY_COLUMNS = ("t", "u", "w", "R", "K1", "K2", "J")


def _trajectory_n3(p: ModelParams, U0, W0, horizon: int, seed: int):
    rng = RngStream(seed, stream_id=0)
    u = min(float(U0), float(W0))
    w = max(float(U0), float(W0))

    def row(t, u, w):
        return {"t": t, "u": u, "w": w, "R": w / u, "K1": u, "K2": 1.0 / u, "J": u + 1.0 / u}

    rows = [row(0, u, w)]
    for t in range(1, horizon + 1):
        block = draw_block(p, rng, t=t)
        u = float(step_n3(u, block, p))
        w = float(step_n3(w, block, p))
        rows.append(row(t, u, w))
    return rows


# ---------------------------------------------------------------------------
# one-shot coupling TV estimation


def _one_shot_indicators(p: ModelParams, u, w, rng: RngStream):
    """Miscoupling indicator and conditional miscoupling probability.

    One one-shot attempt per replica: shared (g1, g3), candidate under the
    lower chain's conditional density per coordinate.  The conditional
    probability ``1 - prod_i overlap_i`` integrates the vertical coordinate
    out analytically.
    """
    if p.n == 4:
        m = u[0].shape
        a1, a2, a3, a4 = block_shapes(p)
        g1 = rng.gamma(a1, size=m)
        g3 = rng.gamma(a3, size=m)
        du = reduced_rates(u, (g1, g3), p)
        dw = reduced_rates(w, (g1, g3), p)
        miss = np.zeros(m, dtype=bool)
        overlap = np.ones(m)
        for alpha, ru, rw in ((a2, du[0], dw[0]), (a4, du[1], dw[1])):
            y = rng.gamma(alpha, size=m) / ru
            log_v = np.log(rng.uniform(size=m))
            coal = log_v <= alpha * (np.log(rw) - np.log(ru)) - (rw - ru) * y
            miss |= ~coal
            tv, _ = gamma_tv(alpha, ru, rw)
            overlap = overlap * (1.0 - tv)
        return miss, 1.0 - overlap
    # n = 3: scalar chain, single coordinate
    m = u.shape
    a1, a2, a3 = block_shapes(p)
    g1 = rng.gamma(a1, size=m)
    g3 = rng.gamma(a3, size=m)
    du = g1 / (u + p.x) + g3 / (u + p.b)
    dw = g1 / (w + p.x) + g3 / (w + p.b)
    y = rng.gamma(a2, size=m) / du
    log_v = np.log(rng.uniform(size=m))
    coal = log_v <= a2 * (np.log(dw) - np.log(du)) - (dw - du) * y
    tv, _ = gamma_tv(a2, du, dw)
    return ~coal, tv


@dataclass
class TvEstimate:
    """Coupling-based total variation estimate at one theorem index."""

    t: int
    wall_clock_t: int
    fraction: float
    fraction_se: float
    conditional: float
    conditional_se: float
    bound: float
    n: int
    r0: float
    j0: float


def estimate_tv_by_coupling(p: ModelParams, U0, W0, t: int, cfg: McConfig,
                            table: Optional[ConstantsTable] = None) -> McReport:
    """Estimate TV at theorem index ``t`` via uniform coupling + one shot.

    For n = 4: uniform coupling of the envelope chains to step t+2, one-shot
    coalescence attempt on the step-(t+3) transition; the estimate is the
    miscoupling fraction.  For n = 3 the one-shot happens at step t+2.  The
    conditional (vertical-coordinate-integrated) estimate of the same
    probability is reported alongside; it resolves probabilities far below
    1/n_replicas.
    """
    table = table or compute_constants(p)
    n_uniform = t + 2 if p.n == 4 else t + 1

    if p.n == 4:
        env = envelope_init(U0, W0)
        r0, j0 = float(env.r0), float(env.j0)
    else:
        m0 = min(float(U0), float(W0))
        M0 = max(float(U0), float(W0))
        if m0 <= 0:
            raise ValueError("states must be positive")
        r0, j0 = M0 / m0, m0 + 1.0 / m0

    def chunk_fn(chunk_id, m):
        rng = RngStream(cfg.seed, stream_id=chunk_id)
        if p.n == 4:
            u = _broadcast_state(env.u0, m)
            w = _broadcast_state(env.w0, m)
            shapes = block_shapes(p)
            for s in range(1, n_uniform + 1):
                block = draw_block(p, rng, t=s, size=m)
                g1, g2, g3, g4 = block.gamma
                mid_u = g3 / (u[0] + u[1])
                mid_w = g3 / (w[0] + w[1])
                u = (g2 / (g1 / (p.x + u[0]) + mid_u), g4 / (p.b + mid_u))
                w = (g2 / (g1 / (p.x + w[0]) + mid_w), g4 / (p.b + mid_w))
            miss, cond = _one_shot_indicators(p, u, w, rng)
        else:
            u = np.full(m, m0)
            w = np.full(m, M0)
            for s in range(1, n_uniform + 1):
                block = draw_block(p, rng, t=s, size=m)
                u = step_n3(u, block, p)
                w = step_n3(w, block, p)
            miss, cond = _one_shot_indicators(p, u, w, rng)
        return miss.sum(), cond.sum(), np.square(cond).sum()

    t0 = time.perf_counter()
    parts = _run_chunked(chunk_fn, cfg.n_replicas, cfg)
    n = cfg.n_replicas
    n_miss = sum(int(part[0]) for part in parts)
    cond_sum = sum(float(part[1]) for part in parts)
    cond_sq = sum(float(part[2]) for part in parts)
    frac = n_miss / n
    frac_se = math.sqrt(max(frac * (1.0 - frac), 0.0) / n)
    cond_mean = cond_sum / n
    cond_var = max(cond_sq / n - cond_mean ** 2, 0.0)
    cond_se = math.sqrt(cond_var / n)

    if p.n == 4:
        theorem = "fixed_start_small_j0" if j0 <= table.eta else "fixed_start"
        spec = BoundSpec(theorem=theorem, table=table, sum_a=p.sum_tail, r0=r0, j0=j0)
    else:
        spec = BoundSpec(theorem="n3", table=table, sum_a=p.sum_tail, r0=r0, j0=j0)
    bound = min(1.0, evaluate_bound(spec, t))
    runtime = time.perf_counter() - t0

    est = TvEstimate(
        t=t, wall_clock_t=t + 3 if p.n == 4 else t + 2,
        fraction=frac, fraction_se=frac_se,
        conditional=cond_mean, conditional_se=cond_se,
        bound=bound, n=n, r0=r0, j0=j0,
    )
    report = McReport.one_sided(
        name=f"tv_coupling_n{p.n}_t{t}", estimate=frac, se=frac_se, target=bound,
        sigmas=cfg.confidence_sigmas, n=n, runtime_s=runtime,
        note=f"one-shot at wall-clock step {est.wall_clock_t}",
        extra={
            "conditional": cond_mean, "conditional_se": cond_se,
            "wall_clock_t": est.wall_clock_t, "r0": r0, "j0": j0, "bound": bound,
        },
    )
    # the conditional estimator must respect the same bound
    report.passed = report.passed and (cond_mean <= bound + cfg.confidence_sigmas * cond_se)
    return report


# ---------------------------------------------------------------------------
# drift verification at fixed states


def history_states(p: ModelParams, seed: int, starts: Sequence, steps: Sequence[int]):
    """Chain-consistent (full state, producing block, t) triples.

    Each start is advanced the requested number of steps with its own stream
    so the drift identities that rely on the state's history hold exactly.
    """
    out = []
    for k, ((u2, u4), n_steps) in enumerate(zip(starts, steps)):
        rng = RngStream(seed, stream_id=9_000 + k)
        u2, u4 = float(u2), float(u4)
        full, block = None, None
        for t in range(1, n_steps + 1):
            block = draw_block(p, rng, t=t)
            g1, g2, g3, g4 = block.gamma
            mid = g3 / (u2 + u4)
            full = (g1 / (p.x + u2), g2 / (g1 / (p.x + u2) + mid), mid, g4 / (p.b + mid))
            u2, u4 = full[1], full[3]
        out.append((tuple(float(c) for c in full), block, n_steps))
    return out


def verify_drift_mc(p: ModelParams, states, n: int, rng: RngStream,
                    cfg: Optional[McConfig] = None,
                    table: Optional[ConstantsTable] = None):
    """One-step conditional drift checks at fixed history-consistent states.

    For each (full state, producing block, t): empirical E[K1'] vs
    zeta1*K1 + C1, E[K2'] vs zeta2*K2 + C2, and, when J >= eta, E[J'] vs
    beta*J; all one-sided at ``sigmas`` standard errors.
    """
    from .ratio_drift import drift_quantities

    table = table or compute_constants(p)
    sigmas = cfg.confidence_sigmas if cfg else 3.0
    reports = []
    for i, (full, block, t) in enumerate(states):
        k1, k2, j, _ = drift_quantities(full, block, p, t)
        u2, u4 = full[1], full[3]
        stream = RngStream(rng.seed, stream_id=5_000 + i)
        t0 = time.perf_counter()
        g = draw_block(p, stream, t=t + 1, size=n).gamma
        mid = g[2] / (u2 + u4)
        u1n = g[0] / (p.x + u2)
        u2n = g[1] / (g[0] / (p.x + u2) + mid)
        u4n = g[3] / (p.b + mid)
        k1n = u2n + u4n
        k2n = (u1n + mid + p.b) / (g[1] + g[3])
        jn = k1n + k2n
        rt = time.perf_counter() - t0

        def se(v):
            return float(v.std(ddof=1) / math.sqrt(n))

        reports.append(McReport.one_sided(
            f"drift_k1_state{i}", k1n.mean(), se(k1n), table.zeta1 * k1 + table.c1,
            sigmas, n, rt, note=f"state t={t}, K1={k1:.4g}"))
        reports.append(McReport.one_sided(
            f"drift_k2_state{i}", k2n.mean(), se(k2n), table.zeta2 * k2 + table.c2,
            sigmas, n, rt, note=f"state t={t}, K2={k2:.4g}"))
        if j >= table.eta:
            reports.append(McReport.one_sided(
                f"drift_j_state{i}", jn.mean(), se(jn), table.beta * j,
                sigmas, n, rt, note=f"J={j:.4g} >= eta"))
    return reports


# ---------------------------------------------------------------------------
# inequality-level checks


def stopped_states(p: ModelParams, U0, W0, times: Sequence[int], seed: int):
    """Coupled records frozen at fixed times along one seeded trajectory."""
    rng = RngStream(seed, stream_id=0)
    rec = init_record(tuple(map(float, U0)), tuple(map(float, W0)))
    want = sorted(set(int(t) for t in times))
    out = {}
    if want and want[0] == 0:
        out[0] = rec
    for t in range(1, (max(want) if want else 0) + 1):
        block = draw_block(p, rng, t=t)
        rec = ratio_step(rec, block, p)
        if t in want:
            out[t] = rec
    return [out[t] for t in want]


def one_shot_ratio_bound_mc(p: ModelParams, records, trials: int, cfg: McConfig,
              table: Optional[ConstantsTable] = None):
    """One-shot miscoupling frequency vs 1 - R^{-(a2+a3+a4+a5)} at stopped states."""
    reports = []
    sum_a = p.sum_tail
    for i, rec in enumerate(records):
        stream = RngStream(cfg.seed, stream_id=3_000 + i)
        u = (np.full(trials, float(rec.u[0])), np.full(trials, float(rec.u[1])))
        w = (np.full(trials, float(rec.w[0])), np.full(trials, float(rec.w[1])))
        t0 = time.perf_counter()
        miss, _ = _one_shot_indicators(p, u, w, stream)
        freq = float(miss.mean())
        se = math.sqrt(max(freq * (1 - freq), 0.0) / trials)
        target = 1.0 - float(rec.ratio) ** (-sum_a)
        reports.append(McReport.one_sided(
            f"one_shot_ratio_state{i}", freq, se, target, cfg.confidence_sigmas, trials,
            time.perf_counter() - t0, note=f"R_t={float(rec.ratio):.6g} at t={rec.t}"))
    return reports


@dataclass
class StoppingTimeData:
    """Per-replica quantities at the first entrance S of J into {J <= eta}."""

    s_time: np.ndarray
    r_at_s: np.ndarray
    rhat_at_s: np.ndarray
    q_at_s: np.ndarray
    r_at_s2: np.ndarray
    jcheck_sums: np.ndarray       # sums of J-hat_{0,t}, t = 1..tmax
    jcheck_sumsq: np.ndarray
    j0: float
    n: int


def stopping_time_mc(p: ModelParams, U0, W0, cfg: McConfig,
                 table: Optional[ConstantsTable] = None,
                 jcheck_tmax: int = 10, cap: int = 5_000) -> StoppingTimeData:
    """Track R, r-hat, and Q at S = first t >= 1 with J_t <= eta, plus R_{S+2}."""
    table = table or compute_constants(p)
    eta = table.eta
    env = envelope_init(U0, W0)

    def chunk_fn(chunk_id, m):
        rng = RngStream(cfg.seed, stream_id=chunk_id)
        rec = init_record(_broadcast_state(U0, m), _broadcast_state(W0, m))
        s_time = np.full(m, -1, dtype=np.int64)
        r_s = np.full(m, np.nan)
        rhat_s = np.full(m, np.nan)
        q_s = np.full(m, np.nan)
        r_s2 = np.full(m, np.nan)
        jc_sum = np.zeros(jcheck_tmax + 1)
        jc_sq = np.zeros(jcheck_tmax + 1)
        t = 0
        while True:
            t += 1
            if t > cap:
                raise RuntimeError("stopping time did not resolve within cap")
            block = draw_block(p, rng, t=t, size=m)
            rec = ratio_step(rec, block, p)
            hit = (s_time < 0) & (rec.j <= eta)
            s_time[hit] = t
            r_s[hit] = rec.ratio[hit]
            rhat_s[hit] = rec.r_hat[hit]
            at_s1 = s_time == t - 1
            q_s[at_s1] = rec.q[at_s1]
            at_s2 = s_time == t - 2
            r_s2[at_s2] = rec.ratio[at_s2]
            if t <= jcheck_tmax:
                alive = s_time < 0  # J has stayed above eta through t
                vals = np.where(alive, rec.j, 0.0)
                jc_sum[t] += vals.sum()
                jc_sq[t] += np.square(vals).sum()
            if np.all(s_time >= 0) and t >= int(s_time.max()) + 2 and t >= jcheck_tmax:
                break
        return s_time, r_s, rhat_s, q_s, r_s2, jc_sum, jc_sq

    parts = _run_chunked(chunk_fn, cfg.n_replicas, cfg, stream_offset=0)
    cat = lambda k: np.concatenate([np.atleast_1d(part[k]) for part in parts])
    return StoppingTimeData(
        s_time=cat(0), r_at_s=cat(1), rhat_at_s=cat(2), q_at_s=cat(3), r_at_s2=cat(4),
        jcheck_sums=sum(part[5] for part in parts),
        jcheck_sumsq=sum(part[6] for part in parts),
        j0=float(env.j0), n=cfg.n_replicas,
    )


def moment_identity_mc(a2: float, a4: float, n_pairs: int, seed: int, chunk: int = 2_000_000):
    """MC estimate of E[(g2/g4 + g4/g2)/(g2 + g4)] for unit-rate gammas."""
    total = 0.0
    done = 0
    cid = 0
    while done < n_pairs:
        m = min(chunk, n_pairs - done)
        rng = RngStream(seed, stream_id=7_000 + cid)
        g2 = rng.gamma(a2, size=m)
        g4 = rng.gamma(a4, size=m)
        total += float(np.sum((g2 / g4 + g4 / g2) / (g2 + g4)))
        done += m
        cid += 1
    return total / n_pairs


def _paired_one_sided(name, lhs, rhs, sigmas, runtime_s, note=""):
    """Check E[lhs] <= E[rhs] via the paired differences lhs - rhs."""
    diff = lhs - rhs
    n = diff.size
    se = float(diff.std(ddof=1) / math.sqrt(n))
    return McReport.one_sided(
        name, float(diff.mean()), se, 0.0, sigmas, n, runtime_s,
        note=note, extra={"lhs_mean": float(lhs.mean()), "rhs_mean": float(rhs.mean())},
    )


def verify_inequality_suite(p: ModelParams, cfg: McConfig,
                       table: Optional[ConstantsTable] = None,
                       probe_times=(0, 1, 2, 3, 5, 8, 12, 20, 35, 60),
                       probe_trials: Optional[int] = None,
                       identity_pairs: int = 1_000_000):
    """The full inequality-level MC verification battery for an n = 4 model."""
    table = table or compute_constants(p)
    sig = cfg.confidence_sigmas
    reports = []

    # (a) one-shot ratio-power bound at stopped states along a seeded trajectory
    recs = stopped_states(p, (1.0, 2.0), (0.5, 4.0), probe_times, cfg.seed + 17)
    reports += one_shot_ratio_bound_mc(p, recs, probe_trials or cfg.n_replicas, cfg, table)

    # (b) stopped-ratio contraction, stopped Q bound, and excursion J decay,
    # all from one stopping-time run
    t0 = time.perf_counter()
    data = stopping_time_mc(p, (0.02, 0.02), (1.0, 1.0), cfg, table)
    rt = time.perf_counter() - t0
    reports.append(_paired_one_sided(
        "stopped_ratio_contraction", data.r_at_s2 - 1.0, table.r * (data.r_at_s - 1.0),
        sig, rt, note="E[R_{S+2}-1] <= r E[R_S-1], S = first J <= eta"))
    reports.append(_paired_one_sided(
        "stopped_q_bound", data.q_at_s * data.r_at_s,
        data.rhat_at_s * (data.r_at_s - 1.0) + 1.0,
        sig, rt, note="E[Q_S R_S] <= E[r-hat_S (R_S - 1)] + 1"))

    worst = -math.inf
    worst_note = ""
    for t in range(1, data.jcheck_sums.size):
        mean = data.jcheck_sums[t] / data.n
        var = max(data.jcheck_sumsq[t] / data.n - mean ** 2, 0.0)
        se = math.sqrt(var / data.n)
        target = table.beta ** t * max(table.eta, data.j0)
        margin = mean - (target + sig * se)
        if margin > worst:
            worst, worst_note = margin, f"t={t}: E[J-check]={mean:.4g} vs {target:.4g}"
    reports.append(McReport(
        name="excursion_j_decay", estimate=worst, ci_halfwidth=0.0, target=0.0,
        passed=worst <= 0.0, n=data.n, runtime_s=rt, note=worst_note))

    # (c) excursion-count bound and (f) ratio decay curve, J0 <= eta start
    cfg8 = McConfig(n_replicas=cfg.n_replicas, horizon=max(VISIT_TMAX, 52),
                    seed=cfg.seed + 29, confidence_sigmas=sig,
                    workers=cfg.workers, chunk_size=cfg.chunk_size)
    t0 = time.perf_counter()
    stats = run_replicas(p, (1.0, 2.0), (0.5, 4.0), cfg8, table)
    rt = time.perf_counter() - t0
    if stats.j0 > table.eta:
        raise ValueError("the excursion-count check requires a start with J0 <= eta")
    worst = -math.inf
    worst_note = ""
    for t in range(1, VISIT_TMAX + 1):
        for k in range(0, t + 1):
            freq = stats.visits_hist[t, k] / stats.n
            se = math.sqrt(max(freq * (1 - freq), 0.0) / stats.n)
            target = math.comb(t, k) * table.beta ** (t - k)
            margin = freq - (min(1.0, target) + sig * se)
            if margin > worst:
                worst, worst_note = margin, f"(t={t}, k={k}): freq={freq:.4g} vs {min(1.0, target):.4g}"
    reports.append(McReport(
        name="excursion_counts", estimate=worst, ci_halfwidth=0.0, target=0.0,
        passed=worst <= 0.0, n=stats.n, runtime_s=rt, note=worst_note))

    worst = -math.inf
    worst_note = ""
    for t in (1, 2, 5, 10, 20, 50):
        mean = stats.mean_ratio[t + 2]
        se = stats.se_ratio[t + 2]
        target = 1.0 + 3.0 * table.r ** (t / (2.0 * table.d)) * (stats.r0 - 1.0)
        margin = mean - (target + sig * se)
        if margin > worst:
            worst, worst_note = margin, f"t={t}: E[R_(t+2)]={mean:.6g} vs {target:.6g}"
    reports.append(McReport(
        name="ratio_decay_curve", estimate=worst, ci_halfwidth=0.0, target=0.0,
        passed=worst <= 0.0, n=stats.n, runtime_s=rt, note=worst_note))

    # (e) closed-form moment identity
    shapes = block_shapes(p)
    for (s2, s4) in ((shapes[1], shapes[3]), (2.0, 2.0)):
        t0 = time.perf_counter()
        mc = moment_identity_mc(s2, s4, identity_pairs, cfg.seed + 41)
        cf = ratio_expectation_closed_form(s2, s4)
        rel = abs(mc - cf) / cf
        reports.append(McReport(
            name=f"moment_identity_{s2:g}_{s4:g}", estimate=rel, ci_halfwidth=0.0,
            target=0.01, passed=rel <= 0.01, n=identity_pairs,
            runtime_s=time.perf_counter() - t0,
            note=f"mc={mc:.6g} closed={cf:.6g}"))
    return reports


def verify_auxiliary_math(d_values=(9.2551, 9.3047, 3.0), betas=(7.0 / 9.0, 0.51, 0.6, 0.9, 0.99)):
    """Deterministic sweeps for the calculus facts behind the rate constants."""
    reports = []

    t0 = time.perf_counter()
    ok = True
    note = ""
    for d in d_values:
        for t in range(1, 1001):
            k = int(t // d)
            log_binom = sp.gammaln(t + 1) - sp.gammaln(k + 1) - sp.gammaln(t - k + 1)
            if log_binom > (t / d) * (math.log(d) + 1.0) + 1e-9:
                ok, note = False, f"binomial bound fails at t={t}, d={d}"
                break
    reports.append(McReport("aux_binomial_bound", 0.0 if ok else 1.0, 0.0, 0.0,
                            ok, 1000 * len(d_values), time.perf_counter() - t0, note))

    t0 = time.perf_counter()
    y = np.logspace(math.log10(0.01), 2, 2000)
    ok = True
    note = ""
    for beta in betas:
        lhs = y * beta ** y
        rhs = 2.0 * beta ** (y / 2.0) / (math.e * abs(math.log(beta)))
        if not np.all(lhs <= rhs * (1 + 1e-12)):
            ok, note = False, f"y*beta^y bound fails for beta={beta}"
            break
    reports.append(McReport("aux_ybetay_bound", 0.0 if ok else 1.0, 0.0, 0.0,
                            ok, y.size * len(betas), time.perf_counter() - t0, note))

    t0 = time.perf_counter()
    ok = True
    note = ""
    xs = np.logspace(-2, 2, 200)
    ys = np.logspace(-2, 2, 200)
    for a, b in ((1.0, 2.0), (0.5, 3.0), (2.0, 2.5)):
        g = (xs[:, None] / b + ys[None, :]) / (xs[:, None] / a + ys[None, :])
        if not np.all(np.diff(g, axis=0) <= 1e-12):
            ok, note = False, f"not decreasing in x for (a,b)=({a},{b})"
            break
        if not np.all(np.diff(g, axis=1) >= -1e-12):
            ok, note = False, f"not increasing in y for (a,b)=({a},{b})"
            break
    reports.append(McReport("aux_secant_monotone", 0.0 if ok else 1.0, 0.0, 0.0,
                            ok, xs.size * ys.size * 3, time.perf_counter() - t0, note))
    return reports


# ---------------------------------------------------------------------------
# orchestration


def tv_grid_reports(p: ModelParams, U0, W0, t_grid, cfg: McConfig,
                    table: Optional[ConstantsTable] = None):
    """TV estimates on a grid plus a strict-decay report.

    Soundness (estimate below the clamped bound) is asserted for both the
    indicator fraction and the conditional estimate; strict decrease across
    the grid is asserted on the conditional estimate, which still resolves
    probabilities below 1/n_replicas once chains have numerically coalesced.
    """
    table = table or compute_constants(p)
    reports = [estimate_tv_by_coupling(p, U0, W0, t, cfg, table) for t in t_grid]
    conds = [r.extra["conditional"] for r in reports]
    fracs = [r.estimate for r in reports]
    strict = all(b < a for a, b in zip(conds, conds[1:]))
    frac_noninc = all(b <= a for a, b in zip(fracs, fracs[1:]))
    reports.append(McReport(
        name=f"tv_decay_n{p.n}", estimate=0.0 if strict else 1.0, ci_halfwidth=0.0,
        target=0.0, passed=strict and frac_noninc, n=cfg.n_replicas, runtime_s=0.0,
        note=f"conditional estimates {['%.3g' % c for c in conds]}",
        extra={"conditional": conds, "fraction": fracs, "t_grid": list(t_grid)},
    ))
    return reports


def default_drift_states(p: ModelParams, seed: int):
    """Twenty chain-consistent test states spanning moderate and extreme J."""
    states = history_states(
        p, seed,
        starts=[(1.0, 1.0), (0.5, 4.0), (1.0, 2.0), (5.0, 5.0), (0.2, 0.2),
                (10.0, 1.0), (1.0, 10.0), (3.0, 0.3), (0.05, 0.05), (100.0, 100.0)],
        steps=[1, 1, 1, 1, 1, 3, 3, 3, 1, 1],
    )
    states += history_states(
        p, seed + 1,
        starts=[(0.005, 0.005), (200.0, 200.0), (0.01, 5.0), (2.0, 2.0), (0.8, 1.3),
                (30.0, 0.02), (0.02, 30.0), (7.0, 0.5), (0.001, 0.001), (500.0, 1.0)],
        steps=[1, 1, 1, 2, 2, 1, 1, 2, 1, 1],
    )
    return states


def verify_suite(p: ModelParams, cfg: McConfig, t_grid=(5, 10, 25, 50, 100)):
    """The full verification battery for one model (used by the CLI)."""
    table = compute_constants(p)
    reports = []
    if p.n == 4:
        t0 = time.perf_counter()
        stats = run_replicas(p, (1.0, 2.0), (0.5, 4.0), cfg, table)
        reports.append(McReport(
            name="pathwise_suite", estimate=float(stats.violations), ci_halfwidth=0.0,
            target=0.0, passed=stats.violations == 0, n=stats.n * stats.horizon,
            runtime_s=time.perf_counter() - t0,
            note=f"{stats.n} replicas x {stats.horizon} steps, all pathwise checks"))

        states = default_drift_states(p, cfg.seed + 3)
        reports += verify_drift_mc(p, states, max(10_000, cfg.n_replicas), RngStream(cfg.seed), cfg, table)
        reports += verify_inequality_suite(p, cfg, table)
        reports += tv_grid_reports(p, (1.0, 2.0), (0.5, 4.0), t_grid, cfg, table)
    else:
        reports += tv_grid_reports(p, 1.0, 4.0, t_grid, cfg, table)
    reports += verify_auxiliary_math()
    return reports
