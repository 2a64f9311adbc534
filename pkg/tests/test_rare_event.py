import numpy as np
import pytest

from amsim.dynamics import StepperConfig
from amsim.errors import (
    AbsorbedTimeoutError,
    ExtinctionError,
    InvalidArgumentError,
    NotConvergedError,
)
from amsim.model import KIND_CHAIN, KIND_GRID, ModelParams, double_well
from amsim.rare_event import (
    HIT_A,
    HIT_B,
    AmsConfig,
    ReactionCoordinate,
    StoppedRun,
    ams_estimate,
    crossing_positions,
    direct_mc_estimate,
    mean_magnetization,
    run_until_absorbed,
    xi,
)
from amsim.rng import RngKey


def toy_config(seed=0, n_rep=20, k_rep=1, **kwargs):
    p = ModelParams(KIND_CHAIN, 1, 1.0, 0.08, 0.01, double_well())
    defaults = dict(
        n_rep=n_rep, z_a=-0.9, z_b=0.9, x0=np.array([-0.8]),
        stepper=StepperConfig(p), master_seed=seed, k_rep=k_rep,
        max_steps_per_run=10_000_000)
    defaults.update(kwargs)
    return AmsConfig(**defaults)


def grid_config(seed=0, n_rep=20, epsilon=0.3):
    p = ModelParams(KIND_GRID, 11, 1.0, epsilon, 0.02, double_well())
    return AmsConfig(
        n_rep=n_rep, z_a=-0.9, z_b=0.9, x0=np.full(11, -0.8),
        stepper=StepperConfig(p), master_seed=seed,
        max_steps_per_run=10_000_000)


def test_reaction_coordinate_is_the_mean():
    rc = mean_magnetization()
    assert xi(rc, np.array([0.2, 0.4, -0.3])) == pytest.approx(0.1)
    with pytest.raises(InvalidArgumentError):
        ReactionCoordinate(kind="energy")


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        toy_config(n_rep=1)
    with pytest.raises(InvalidArgumentError):
        toy_config(k_rep=0)
    with pytest.raises(InvalidArgumentError):
        toy_config(n_rep=5, k_rep=5)
    with pytest.raises(InvalidArgumentError):
        toy_config(z_a=0.5, z_b=-0.5)
    with pytest.raises(InvalidArgumentError):
        toy_config(x0=np.array([-0.95]))  # starts outside the band


def test_absorbed_run_postconditions():
    cfg = toy_config()
    run = run_until_absorbed(cfg, cfg.x0, RngKey(0, replica_id=0))
    assert run.stop_reason in (HIT_A, HIT_B)
    assert np.array_equal(run.states[0], cfg.x0)
    assert run.levels[0] == pytest.approx(-0.8)
    # interior levels stay inside the band, the last one leaves it
    assert np.all((run.levels[:-1] >= cfg.z_a) & (run.levels[:-1] <= cfg.z_b))
    final = run.levels[-1]
    assert final < cfg.z_a or final > cfg.z_b
    assert run.max_level == pytest.approx(run.levels.max())
    assert run.n_steps == len(run.levels) - 1
    steps = list(run.path)
    assert steps[0][0] == 0 and steps[-1][0] == run.n_steps


def test_absorbed_run_budget_raises_with_partial_run():
    cfg = toy_config(max_steps_per_run=5)
    with pytest.raises(AbsorbedTimeoutError) as err:
        run_until_absorbed(cfg, cfg.x0, RngKey(0, replica_id=0))
    partial = err.value.partial_run
    assert partial.n_steps == 5
    assert partial.stop_reason == "max-steps"


def test_python_and_compiled_simulation_paths_agree():
    # a non-standard potential object with double-well callbacks forces the
    # per-step path; the compiled path must produce the same trajectory
    from amsim.model import Potential

    slow_dw = Potential(
        v=lambda x: 0.25 * x**4 - 0.5 * x**2,
        dv=lambda x: x * x * x - x,
        d2v=lambda x: 3.0 * x**2 - 1.0,
        d3v=lambda x: 6.0 * x,
        standard_double_well=False,
    )
    fast = ModelParams(KIND_CHAIN, 3, 0.5, 0.08, 0.01, double_well())
    slow = ModelParams(KIND_CHAIN, 3, 0.5, 0.08, 0.01, slow_dw)
    for params in [(fast, slow)]:
        runs = []
        for p in params:
            cfg = AmsConfig(
                n_rep=2, z_a=-0.9, z_b=0.9, x0=np.full(3, -0.8),
                stepper=StepperConfig(p), master_seed=5)
            runs.append(run_until_absorbed(cfg, cfg.x0, RngKey(5, replica_id=1)))
        assert runs[0].stop_reason == runs[1].stop_reason
        assert np.array_equal(runs[0].states, runs[1].states)


def test_estimate_identity_and_trajectory_contracts():
    for cfg in (toy_config(seed=11), toy_config(seed=12, k_rep=3), grid_config(seed=13)):
        out = ams_estimate(cfg, workers=1)
        assert 0.0 < out.estimate <= 1.0
        # killed levels never decrease across iterations
        levels = [row[2] for row in out.kill_log]
        assert all(a <= b for a, b in zip(levels, levels[1:]))
        # survival-product identity, collapsing to the literal power
        # when every iteration killed exactly k_rep replicas
        n_hit = sum(r.stop_reason == HIT_B for r in out.reactive_trajectories)
        expected = 1.0
        for k_q in out.kill_counts:
            expected *= 1.0 - k_q / cfg.n_rep
        expected *= n_hit / cfg.n_rep
        if out.tie_events == 0 and n_hit == cfg.n_rep:
            assert out.estimate == (1.0 - cfg.k_rep / cfg.n_rep) ** out.q_iterations
        assert out.estimate == pytest.approx(expected, rel=1e-12)
        assert sum(k > cfg.k_rep for k in out.kill_counts) == out.tie_events
        # every reported trajectory starts at x0; the ones that reached B
        # did so without first leaving through A
        for run in out.reactive_trajectories:
            assert np.array_equal(run.states[0], cfg.x0)
            if run.stop_reason == HIT_B:
                assert run.levels[-1] > cfg.z_b
                assert np.all(run.levels[:-1] >= cfg.z_a)


def test_estimates_are_identical_for_any_worker_count():
    for cfg_fn in (toy_config, grid_config):
        cfg = cfg_fn(seed=21)
        a = ams_estimate(cfg, workers=1)
        b = ams_estimate(cfg, workers=4)
        assert a.estimate == b.estimate
        assert a.q_iterations == b.q_iterations
        assert a.kill_log == b.kill_log
        for ra, rb in zip(a.reactive_trajectories, b.reactive_trajectories):
            assert np.array_equal(ra.states, rb.states)


def test_zero_temperature_ensemble_goes_extinct():
    # without noise every replica is an identical deterministic path to A,
    # so the first kill wipes the whole ensemble
    p = ModelParams(KIND_CHAIN, 1, 1.0, 0.0, 0.01, double_well())
    cfg = AmsConfig(n_rep=4, z_a=-0.9, z_b=0.9, x0=np.array([-0.8]),
                    stepper=StepperConfig(p), master_seed=0)
    with pytest.raises(ExtinctionError):
        ams_estimate(cfg, workers=1)


def test_iteration_cap_raises_not_converged():
    cfg = toy_config(seed=3, max_iterations=2)
    with pytest.raises(NotConvergedError):
        ams_estimate(cfg, workers=1)


def test_direct_mc_basics():
    cfg = toy_config(seed=9)
    with pytest.raises(InvalidArgumentError):
        direct_mc_estimate(cfg, 0)
    p_hat, se = direct_mc_estimate(cfg, 4096, workers=1)
    assert 0.0 <= p_hat <= 1.0
    assert se == pytest.approx(np.sqrt(p_hat * (1 - p_hat) / 4096))
    # worker count does not change the estimate
    p4, _ = direct_mc_estimate(cfg, 4096, workers=4)
    assert p4 == p_hat


def test_direct_mc_immediate_absorption_shortcut():
    cfg = toy_config()
    cfg.x0 = np.array([0.95])  # moved beyond z_b after construction
    assert direct_mc_estimate(cfg, 100) == (1.0, 0.0)
    cfg.x0 = np.array([-0.95])
    assert direct_mc_estimate(cfg, 100) == (0.0, 0.0)


def test_direct_mc_step_budget_raises():
    cfg = toy_config(max_steps_per_run=3)
    with pytest.raises(AbsorbedTimeoutError):
        direct_mc_estimate(cfg, 256, workers=1)


def _run_from(levels, states):
    levels = np.asarray(levels, dtype=float)
    states = np.asarray(states, dtype=float)
    return StoppedRun(states=states, levels=levels, max_level=float(levels.max()),
                      stop_reason=HIT_B, rng_lineage=((0, None),))


def test_crossing_positions_interpolate_sign_changes():
    states = np.array([[0.0, -0.4], [0.0, 0.4], [0.0, -0.2], [0.0, 0.6]])
    levels = states.mean(axis=1)
    run = _run_from(levels, states)
    crossings = crossing_positions(run, 0.0)
    assert len(crossings) == 3
    for state in crossings:
        assert state.mean() == pytest.approx(0.0, abs=1e-14)
    # first crossing sits midway between the first two states
    assert np.allclose(crossings[0], [0.0, 0.0])


def test_crossing_positions_count_exact_hits_once():
    states = np.array([[-0.5], [0.0], [0.5]])
    run = _run_from(states.ravel(), states)
    crossings = crossing_positions(run, 0.0)
    assert len(crossings) == 1
    assert crossings[0][0] == 0.0
