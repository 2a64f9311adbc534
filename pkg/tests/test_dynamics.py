import numpy as np
import pytest

from amsim.dynamics import (
    GRID_NOISE,
    StepperConfig,
    allen_cahn_step,
    bernoulli_flow,
    euler_step,
    gaussian_field,
    heat_half_step,
    step_with_normals,
)
from amsim.errors import InvalidArgumentError
from amsim.model import KIND_CHAIN, KIND_GRID, ModelParams, double_well, grad_energy
from amsim.rng import RngKey, normals_for_key


def chain(n=5, gamma=0.5, epsilon=0.05, dt=0.01):
    return ModelParams(KIND_CHAIN, n, gamma, epsilon, dt, double_well())

def grid(n=21, gamma=1.0, epsilon=0.05, dt=0.01):
    return ModelParams(KIND_GRID, n, gamma, epsilon, dt, double_well())


def test_scheme_validation():
    with pytest.raises(InvalidArgumentError):
        StepperConfig(grid(), scheme="verlet")
    with pytest.raises(InvalidArgumentError):
        StepperConfig(chain(), noise_truncation=3)  # spectral needs the grid
    with pytest.raises(InvalidArgumentError):
        StepperConfig(grid(9), noise_truncation=10)  # J > N
    with pytest.raises(InvalidArgumentError):
        StepperConfig(grid(), noise_truncation=2.5)


def test_euler_step_zero_noise_is_gradient_descent():
    p = chain(epsilon=0.0)
    cfg = StepperConfig(p)
    x = np.array([0.4, -0.2, 0.1, 0.9, -1.1])
    out = euler_step(cfg, x, RngKey(0))
    assert np.allclose(out, x - grad_energy(p, x) * p.dt, atol=1e-15)


def test_euler_step_matches_shared_step_path_bitwise():
    p = chain()
    cfg = StepperConfig(p)
    x = np.array([0.4, -0.2, 0.1, 0.9, -1.1])
    key = RngKey(3, replica_id=2, step_counter=17)
    g = normals_for_key(key, p.n)
    assert np.array_equal(euler_step(cfg, x, key), step_with_normals(cfg, x, g))


def test_euler_step_requires_chain_kind():
    with pytest.raises(InvalidArgumentError):
        euler_step(StepperConfig(grid()), np.zeros(21), RngKey(0))
    with pytest.raises(InvalidArgumentError):
        allen_cahn_step(StepperConfig(chain()), np.zeros(5), RngKey(0))


def test_bernoulli_flow_solves_the_reaction_ode():
    # semigroup property on random triples
    rng = np.random.default_rng(4)
    for _ in range(100):
        y = rng.uniform(-2.0, 2.0)
        s, t = rng.uniform(0.0, 1.5, 2)
        assert bernoulli_flow(bernoulli_flow(y, s), t) == pytest.approx(
            bernoulli_flow(y, s + t), abs=1e-12)
    # fixed points and attraction to +-1
    for y0 in (-1.0, 0.0, 1.0):
        assert bernoulli_flow(y0, 0.7) == pytest.approx(y0)
    assert bernoulli_flow(0.2, 50.0) == pytest.approx(1.0)
    assert bernoulli_flow(-0.2, 50.0) == pytest.approx(-1.0)
    with pytest.raises(InvalidArgumentError):
        bernoulli_flow(0.5, -0.1)


def test_bernoulli_flow_matches_small_step_integration():
    y, t = 0.37, 0.5
    n = 20000
    h = t / n
    z = y
    for _ in range(n):
        m = z - 0.5 * h * (z**3 - z)  # midpoint integrator
        z -= h * (m**3 - m)
    assert bernoulli_flow(y, t) == pytest.approx(z, abs=1e-8)


def test_heat_half_step_conserves_total_mass_without_noise():
    p = grid(31)
    cfg = StepperConfig(p)
    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, p.n)
    out = heat_half_step(cfg, x, np.zeros(p.n))
    assert np.sum(out) == pytest.approx(np.sum(x), abs=1e-12)
    # and it smooths: the Dirichlet energy cannot increase
    assert np.sum(np.diff(out) ** 2) <= np.sum(np.diff(x) ** 2) + 1e-15


def test_heat_half_step_is_semi_implicit_crank_nicolson():
    p = grid(9, gamma=0.7, epsilon=0.0)
    cfg = StepperConfig(p)
    x = np.sin(np.linspace(0, 3, p.n))
    out = heat_half_step(cfg, x, np.zeros(p.n))
    lap = np.zeros((p.n, p.n))
    for i in range(p.n):
        e = np.zeros(p.n)
        e[i] = 1.0
        lap[:, i] = np.concatenate([[e[1] - e[0]], e[:-2] + e[2:] - 2 * e[1:-1], [e[-2] - e[-1]]])
    b = p.gamma * p.dt / 4.0 / p.dx**2
    lhs = np.eye(p.n) - b * lap
    rhs = (np.eye(p.n) + b * lap) @ x
    assert np.allclose(out, np.linalg.solve(lhs, rhs), atol=1e-12)


def test_splitting_step_zero_noise_decays_to_the_wells():
    p = grid(21, epsilon=0.0)
    cfg = StepperConfig(p)
    x = np.full(p.n, 0.3)
    for _ in range(2000):
        x = allen_cahn_step(cfg, x, RngKey(0))
    assert np.allclose(x, 1.0, atol=1e-6)


def test_strang_and_lie_schemes_agree_to_first_order():
    x0 = np.sin(np.linspace(0, 2, 21)) * 0.5
    outs = {}
    for scheme in ("strang", "lie"):
        p = grid(21, epsilon=0.0, dt=1e-4)
        cfg = StepperConfig(p, scheme=scheme)
        x = x0.copy()
        for _ in range(100):
            x = allen_cahn_step(cfg, x, RngKey(0))
        outs[scheme] = x
    assert np.allclose(outs["strang"], outs["lie"], atol=1e-5)
    assert not np.array_equal(outs["strang"], outs["lie"])


def test_reaction_substep_hook_reduces_to_stochastic_heat():
    # with the nonlinear flow replaced by the identity, two half-steps with
    # shared noise equal one full Crank-Nicolson step with the same field
    p = grid(15)
    cfg = StepperConfig(p, reaction_substep=False)
    assert cfg.em == 1.0
    x = np.linspace(-0.5, 0.5, p.n)
    key = RngKey(11, step_counter=4)
    out = allen_cahn_step(cfg, x, key)
    g = normals_for_key(key, p.n) / np.sqrt(p.dx)
    mid = heat_half_step(cfg, x, g)
    assert np.allclose(out, heat_half_step(cfg, mid, g), atol=1e-12)


def test_independent_half_step_noise_consumes_two_fields():
    p = grid(15)
    shared = StepperConfig(p)
    split = StepperConfig(p, shared_noise=False)
    assert shared.draws_per_step == p.n
    assert split.draws_per_step == 2 * p.n
    x = np.zeros(p.n)
    key = RngKey(5)
    assert not np.array_equal(allen_cahn_step(shared, x, key), allen_cahn_step(split, x, key))


def test_spectral_field_reduces_to_flat_mode_at_zero_truncation():
    p = grid(11)
    cfg = StepperConfig(p, noise_truncation=0)
    field = gaussian_field(cfg, RngKey(3))
    assert np.allclose(field, field[0])


def test_spectral_basis_is_orthonormal_in_the_continuum_limit():
    p = grid(2001)
    cfg = StepperConfig(p, noise_truncation=3)
    basis = cfg.basis
    gram = basis.T @ basis * p.dx
    assert np.allclose(gram, np.eye(4), atol=5e-3)


def test_per_step_noise_variance_matches_white_noise_budget():
    # with the reaction frozen and gamma tiny, the per-node increment
    # variance of the splitting step approaches 2*eps*dt/dx
    p = grid(26, gamma=1e-8, epsilon=0.05, dt=0.002)
    cfg = StepperConfig(p, reaction_substep=False)
    n_samples = 100_000
    x = np.zeros(p.n)
    sums = np.zeros(p.n)
    sq = np.zeros(p.n)
    for i in range(n_samples):
        out = allen_cahn_step(cfg, x, RngKey(99, replica_id=i))
        sums += out
        sq += out * out
    var = sq / n_samples - (sums / n_samples) ** 2
    target = 2 * p.epsilon * p.dt / p.dx
    se = target * np.sqrt(2.0 / n_samples)
    assert np.all(np.abs(var - target) < 3 * se + 0.01 * target)


def test_grid_step_paths_agree_between_python_and_stream_entry():
    p = grid(17)
    cfg = StepperConfig(p)
    x = np.sin(np.linspace(0, 4, p.n)) * 0.3
    key = RngKey(21, replica_id=1, step_counter=9)
    g = normals_for_key(key, cfg.draws_per_step)
    assert np.array_equal(allen_cahn_step(cfg, x, key), step_with_normals(cfg, x, g))
