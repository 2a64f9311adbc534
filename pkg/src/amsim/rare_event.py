"""Reaction coordinate, absorbed-run simulation, Adaptive Multilevel
Splitting, and the direct Monte-Carlo baseline.

Each splitting iteration finds the k_rep-th smallest of the replica max
levels and kills every replica at or below it (k_q >= k_rep of them when
levels tie, which happens with positive probability in discrete time because
a clone shares its donor's path prefix).  The estimator is the product of
the survival fractions (1 - k_q/n_rep), which stays unbiased in the
presence of ties; tie iterations are counted in ``tie_events``.  All
randomness is addressed by :class:`~amsim.rng.RngKey`, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import StepperConfig, step_with_normals
from .errors import (
    AbsorbedTimeoutError,
    ExtinctionError,
    InvalidArgumentError,
    NotConvergedError,
)
from .model import KIND_CHAIN, check_state
from .rng import STEPS_PER_BLOCK, GaussianStream, RngKey, block_normals, child_seed, selection_rng

HIT_A = "hit-A"
HIT_B = "hit-B"
MAX_STEPS = "max-steps"

_REASONS = {
    _kernels.STATUS_HIT_A: HIT_A,
    _kernels.STATUS_HIT_B: HIT_B,
    _kernels.STATUS_TIMEOUT: MAX_STEPS,
}

#: sub-stream tag separating direct-MC noise from AMS replica noise
_DIRECT_MC_STREAM = 1
_MC_BATCH = 1024


@dataclass(frozen=True)
class ReactionCoordinate:
    """Scalar progress functional ranking replicas; only the spatial mean ships."""

    kind: str = "mean-magnetization"

    def __post_init__(self):
        if self.kind != "mean-magnetization":
            raise InvalidArgumentError(f"unknown reaction coordinate {self.kind!r}")


def mean_magnetization() -> ReactionCoordinate:
    return ReactionCoordinate()


def xi(rc: ReactionCoordinate, x) -> float:
    """Reaction-coordinate value; the mean is a sequential left-to-right sum."""
    return float(_kernels.seq_mean(np.ascontiguousarray(x, dtype=float)))


@dataclass
class StoppedRun:
    """A trajectory simulated until absorption below z_A or above z_B.

    ``states[t]`` is the configuration at step ``start_step + t`` (index 0 is
    the initial condition), ``levels[t]`` the reaction-coordinate value.
    """

    states: np.ndarray
    levels: np.ndarray
    max_level: float
    stop_reason: str
    rng_lineage: tuple
    start_step: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.levels) - 1

    @property
    def path(self):
        """Iterator of (step index, state) pairs at full resolution."""
        return ((self.start_step + t, self.states[t]) for t in range(len(self.levels)))


@dataclass
class AmsConfig:
    """Inputs of one splitting run (and of the direct-MC baseline)."""

    n_rep: int
    z_a: float
    z_b: float
    x0: np.ndarray
    stepper: StepperConfig
    master_seed: int = 0
    k_rep: int = 1
    max_iterations: int = 100_000_000
    max_steps_per_run: int = 100_000_000
    reaction: ReactionCoordinate = field(default_factory=mean_magnetization)

    def __post_init__(self):
        if self.n_rep < 2:
            raise InvalidArgumentError("n_rep must be at least 2")
        if not 1 <= self.k_rep < self.n_rep:
            raise InvalidArgumentError("k_rep must satisfy 1 <= k_rep < n_rep")
        if not self.z_a < self.z_b:
            raise InvalidArgumentError("z_a must be below z_b")
        self.x0 = check_state(self.stepper.params, self.x0)
        level0 = xi(self.reaction, self.x0)
        if not self.z_a < level0 < self.z_b:
            raise InvalidArgumentError(
                f"initial level {level0} must lie strictly inside ({self.z_a}, {self.z_b})"
            )


@dataclass
class AmsOutput:
    """Result of one splitting run.

    ``kill_log`` rows are (iteration, killed id, killed level, donor id,
    branch step); ``kill_counts[q-1]`` is the number killed at iteration q.
    ``estimate`` is the product of the per-iteration survival fractions
    (1 - k_q/n_rep), times the fraction of replicas that reached B at
    termination; when every iteration killed exactly k_rep replicas
    (``tie_events == 0``) and all replicas reached B, it equals the literal
    floating-point power (1 - k_rep/n_rep)**q_iterations.
    """

    estimate: float
    q_iterations: int
    kill_log: list
    kill_counts: list
    reactive_trajectories: list
    tie_events: int


def _grow(states, levels, needed):
    cap = len(levels)
    if needed <= cap:
        return states, levels
    new_cap = max(needed, 2 * cap)
    s = np.empty((new_cap, states.shape[1]))
    s[:cap] = states
    lv = np.empty(new_cap)
    lv[:cap] = levels
    return s, lv


def _simulate(cfg: AmsConfig, x_start: np.ndarray, key: RngKey, record: bool):
    """Run to absorption; returns (states, levels, status) with the initial
    state at index 0.  Noise for segment step t comes from key.at_step(t)."""
    st = cfg.stepper
    n = st.params.n
    x = np.ascontiguousarray(x_start, dtype=float).copy()
    lev = float(_kernels.seq_mean(x))
    cap = 512 if record else 1
    states = np.empty((cap, n))
    levels = np.empty(cap)
    states[0] = x
    levels[0] = lev
    if lev < cfg.z_a:
        return states[:1], levels[:1], _kernels.STATUS_HIT_A
    if lev > cfg.z_b:
        return states[:1], levels[:1], _kernels.STATUS_HIT_B
    count = 0
    max_steps = cfg.max_steps_per_run
    stream = GaussianStream(key, st.draws_per_step)
    if st.fast_path:
        scratch = np.empty(n)
        block_index = 0
        while True:
            rows = min(STEPS_PER_BLOCK, max_steps - count)
            if rows <= 0:
                return states[:count + 1], levels[:count + 1], _kernels.STATUS_TIMEOUT
            noise = stream.block(block_index)
            if record:
                states, levels = _grow(states, levels, count + rows + 1)
            if st.params.kind == KIND_CHAIN:
                used, status = _kernels.chain_advance(
                    x, scratch, noise, rows, st.params.dt,
                    st.params.gamma * st.params.n, 1.0 / st.params.n,
                    st.noise_scale, cfg.z_a, cfg.z_b, record, states, levels, count)
            else:
                cn, em, b, cp, den, strang = st.kernel_args()
                used, status = _kernels.grid_advance(
                    x, scratch, noise, rows, cn, em, b, cp, den, strang,
                    st.two_noise, cfg.z_a, cfg.z_b, record, states, levels, count)
            count += used
            if status != _kernels.STATUS_RUNNING:
                return states[:count + 1], levels[:count + 1], status
            block_index += 1
    while True:
        if count >= max_steps:
            return states[:count + 1], levels[:count + 1], _kernels.STATUS_TIMEOUT
        x = step_with_normals(st, x, stream.normals(count))
        lev = float(_kernels.seq_mean(x))
        count += 1
        if record:
            states, levels = _grow(states, levels, count + 1)
            states[count] = x
            levels[count] = lev
        if lev < cfg.z_a:
            return states[:count + 1], levels[:count + 1], _kernels.STATUS_HIT_A
        if lev > cfg.z_b:
            return states[:count + 1], levels[:count + 1], _kernels.STATUS_HIT_B


def _make_run(states, levels, status, lineage, start_step=0) -> StoppedRun:
    return StoppedRun(
        states=states,
        levels=levels,
        max_level=float(levels.max()),
        stop_reason=_REASONS[status],
        rng_lineage=lineage,
        start_step=start_step,
    )


def run_until_absorbed(cfg: AmsConfig, x_start, key: RngKey, start_step: int = 0) -> StoppedRun:
    """Advance one trajectory until its level leaves (z_a, z_b).

    Raises :class:`AbsorbedTimeoutError` (carrying the partial run) when
    ``max_steps_per_run`` is exhausted first.
    """
    x_start = check_state(cfg.stepper.params, x_start)
    states, levels, status = _simulate(cfg, x_start, key, record=True)
    run = _make_run(states, levels, status, ((start_step, key),), start_step)
    if status == _kernels.STATUS_TIMEOUT:
        raise AbsorbedTimeoutError(run, cfg.max_steps_per_run)
    return run


def _workers(workers) -> int:
    if workers is None:
        workers = os.environ.get("AMS_WORKERS", "")
        workers = int(workers) if workers else (os.cpu_count() or 1)
    return max(1, int(workers))


def ams_estimate(cfg: AmsConfig, workers=None) -> AmsOutput:
    """Adaptive Multilevel Splitting estimate of P(hit B before A).

    Per iteration the k_rep replicas with the lowest max levels are killed;
    each is rebranched from a surviving replica drawn uniformly among those
    whose max level strictly exceeds the killed level, copying the donor
    prefix up to the first strict exceedance and resimulating to absorption.
    The result is independent of ``workers`` (default: AMS_WORKERS or CPU
    count).
    """
    workers = _workers(workers)
    seed = cfg.master_seed

    def initial(i):
        key = RngKey(seed, replica_id=i, branch_generation=0)
        states, levels, status = _simulate(cfg, cfg.x0, key, record=True)
        return _make_run(states, levels, status, ((0, key),))

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        if pool is not None:
            runs = list(pool.map(initial, range(cfg.n_rep)))
        else:
            runs = [initial(i) for i in range(cfg.n_rep)]
        for r in runs:
            if r.stop_reason == MAX_STEPS:
                raise AbsorbedTimeoutError(r, cfg.max_steps_per_run)

        max_levels = np.array([r.max_level for r in runs])
        n_hit_b = sum(r.stop_reason == HIT_B for r in runs)
        q = 0
        tie_events = 0
        kill_log = []
        kill_counts = []
        estimate = 1.0
        uniform_kills = True
        while n_hit_b < cfg.n_rep:
            if q >= cfg.max_iterations:
                raise NotConvergedError(q)
            q += 1
            if cfg.k_rep == 1:
                kill_level = float(max_levels[np.argmin(max_levels)])
            else:
                kill_level = float(
                    np.partition(max_levels, cfg.k_rep - 1)[cfg.k_rep - 1])
            if kill_level > cfg.z_b:
                # the k_rep-th worst replica already reached B: splitting
                # further would multiply in spurious survival factors; stop
                # and account for the stragglers through the success fraction
                q -= 1
                break
            # kill every replica at or below the threshold: a clone whose
            # excursion dies immediately shares its donor's max level
            # exactly, and killing only part of such a tied group biases
            # the estimator upward
            killed = [int(i) for i in np.flatnonzero(max_levels <= kill_level)]
            k_q = len(killed)
            if k_q > cfg.k_rep:
                tie_events += 1
                uniform_kills = False
            kill_counts.append(k_q)
            if k_q >= cfg.n_rep:
                raise ExtinctionError(q)
            estimate *= 1.0 - k_q / cfg.n_rep
            eligible = np.flatnonzero(max_levels > kill_level)
            if eligible.size == 0:
                raise ExtinctionError(q)
            rng = selection_rng(seed, q)
            jobs = []
            for j in sorted(killed):
                donor = int(eligible[int(rng.integers(eligible.size))])
                donor_run = runs[donor]
                branch = int(np.argmax(donor_run.levels > kill_level))
                jobs.append((j, donor, branch))
                kill_log.append((q, j, kill_level, donor, branch))

            def rebranch(job, iteration=q):
                j, donor, branch = job
                donor_run = runs[donor]
                key = RngKey(seed, replica_id=j, branch_generation=iteration)
                seg_states, seg_levels, status = _simulate(
                    cfg, donor_run.states[branch], key, record=True)
                states = np.concatenate([donor_run.states[:branch], seg_states])
                levels = np.concatenate([donor_run.levels[:branch], seg_levels])
                lineage = donor_run.rng_lineage + ((branch, key),)
                return j, _make_run(states, levels, status, lineage)

            if pool is not None and len(jobs) > 1:
                results = list(pool.map(rebranch, jobs))
            else:
                results = [rebranch(job) for job in jobs]
            for j, run in results:
                if run.stop_reason == MAX_STEPS:
                    raise AbsorbedTimeoutError(run, cfg.max_steps_per_run)
                old_b = runs[j].stop_reason == HIT_B
                runs[j] = run
                max_levels[j] = run.max_level
                n_hit_b += (run.stop_reason == HIT_B) - old_b
    finally:
        if pool is not None:
            pool.shutdown()

    if uniform_kills:
        # tie-free run: report the literal power, exact in floating point
        estimate = (1.0 - cfg.k_rep / cfg.n_rep) ** q
    if n_hit_b < cfg.n_rep:
        estimate *= n_hit_b / cfg.n_rep
    return AmsOutput(
        estimate=estimate,
        q_iterations=q,
        kill_log=kill_log,
        kill_counts=kill_counts,
        reactive_trajectories=runs,
        tie_events=tie_events,
    )


def direct_mc_estimate(cfg: AmsConfig, n_samples: int, workers=None):
    """Crude Monte-Carlo estimate: fraction of independent runs hitting B first.

    Returns (p_hat, std_err) with the binomial standard error
    sqrt(p(1-p)/n).  Samples are simulated in fixed batches of 1024 with
    batch-indexed noise streams, so the result does not depend on the worker
    count.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be at least 1")
    workers = _workers(workers)
    st = cfg.stepper
    n = st.params.n
    mc_seed = child_seed(cfg.master_seed, _DIRECT_MC_STREAM)
    n_batches = (n_samples + _MC_BATCH - 1) // _MC_BATCH

    lev0 = xi(cfg.reaction, cfg.x0)
    if not cfg.z_a < lev0 < cfg.z_b:
        return (1.0, 0.0) if lev0 > cfg.z_b else (0.0, 0.0)

    def run_batch(k):
        m = min(_MC_BATCH, n_samples - k * _MC_BATCH)
        if st.fast_path:
            xs = np.tile(cfg.x0, (_MC_BATCH, 1))
            status = np.zeros(_MC_BATCH, dtype=np.int64)
            steps = np.zeros(_MC_BATCH, dtype=np.int64)
            scratch = np.empty(n)
            key = RngKey(mc_seed, replica_id=k)
            chunk = 0
            while True:
                noise = block_normals(key, chunk, _MC_BATCH * st.draws_per_step)
                noise = noise.reshape(STEPS_PER_BLOCK, _MC_BATCH, st.draws_per_step)
                if st.params.kind == KIND_CHAIN:
                    active = _kernels.mc_chain_chunk(
                        xs, status, steps, noise, st.params.dt,
                        st.params.gamma * st.params.n, 1.0 / st.params.n,
                        st.noise_scale, cfg.z_a, cfg.z_b,
                        cfg.max_steps_per_run, scratch)
                else:
                    cn, em, b, cp, den, strang = st.kernel_args()
                    active = _kernels.mc_grid_chunk(
                        xs, status, steps, noise, cn, em, b, cp, den, strang,
                        st.two_noise, cfg.z_a, cfg.z_b,
                        cfg.max_steps_per_run, scratch)
                if active == 0:
                    break
                chunk += 1
            status = status[:m]
        else:
            status = np.empty(m, dtype=np.int64)
            for j in range(m):
                key = RngKey(mc_seed, replica_id=k, branch_generation=j)
                _, _, status[j] = _simulate(cfg, cfg.x0, key, record=False)
        if np.any(status == _kernels.STATUS_TIMEOUT):
            raise AbsorbedTimeoutError(None, cfg.max_steps_per_run)
        return int(np.count_nonzero(status == _kernels.STATUS_HIT_B))

    if workers > 1 and n_batches > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(run_batch, range(n_batches)))
    else:
        hits = sum(run_batch(k) for k in range(n_batches))
    p_hat = hits / n_samples
    std_err = float(np.sqrt(p_hat * (1.0 - p_hat) / n_samples))
    return p_hat, std_err


def crossing_positions(run: StoppedRun, hyperplane_level: float) -> list:
    """Linearly interpolated states where the level path crosses a threshold.

    Both crossing directions are reported; steps sitting exactly on the
    threshold contribute their own state once.
    """
    lev = run.levels
    states = run.states
    c = hyperplane_level
    out = []
    a = lev[:-1] - c
    b = lev[1:] - c
    crossing = np.flatnonzero(a * b < 0.0)
    exact = np.flatnonzero(lev == c)
    events = sorted(
        [(int(t), False) for t in crossing] + [(int(t), True) for t in exact])
    for t, is_exact in events:
        if is_exact:
            out.append(states[t].copy())
        else:
            th = (c - lev[t]) / (lev[t + 1] - lev[t])
            out.append(states[t] + th * (states[t + 1] - states[t]))
    return out
