"""Energies, gradients and Gibbs log-densities for the two model kinds.

Two discretizations share one interface:

* ``particle-chain``: N coupled particles on a line, nearest-neighbour
  quadratic coupling of rigidity ``gamma``, each in an on-site potential.
  Total energy

      E(x) = (gamma*N/2) * sum_i (x_{i+1}-x_i)^2 + (1/N) * sum_i V(x_i)

  with mirror (Neumann) ghost values at both ends, so the boundary coupling
  terms vanish.

* ``allen-cahn-grid``: finite-difference grid on [0, 1] with mesh
  ``dx = 1/(N-1)`` and node i at ``i*dx``.  The energy is the Riemann sum

      E(x) = (gamma/(2*dx)) * sum_i (x_{i+1}-x_i)^2 + dx * sum_i V(x_i)

  with the same mirror ghosts (homogeneous Neumann boundary).

States are plain 1-d numpy arrays of length N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, InvalidStateError

KIND_CHAIN = "particle-chain"
KIND_GRID = "allen-cahn-grid"


@dataclass(frozen=True)
class Potential:
    """Scalar on-site potential with derivative callbacks.

    ``growth_exponent`` is the polynomial growth exponent alpha of the
    potential (2 for the quartic double well).  ``standard_double_well`` flags
    the built-in quartic; fast integrator kernels are only available for it.
    """

    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]
    d2v: Callable[[np.ndarray], np.ndarray]
    d3v: Callable[[np.ndarray], np.ndarray]
    growth_exponent: float = 2.0
    standard_double_well: bool = False


def double_well() -> Potential:
    """The symmetric quartic double well V(x) = x^4/4 - x^2/2."""
    return Potential(
        v=lambda x: 0.25 * x**4 - 0.5 * x**2,
        # x*x*x instead of x**3: keeps the expression tree identical to the
        # compiled integrator kernels, so both paths round identically
        dv=lambda x: x * x * x - x,
        d2v=lambda x: 3.0 * x**2 - 1.0,
        d3v=lambda x: 6.0 * x,
        growth_exponent=2.0,
        standard_double_well=True,
    )


@dataclass(frozen=True)
class ModelParams:
    """Physical and discretization parameters of one model instance."""

    kind: str
    n: int
    gamma: float
    epsilon: float
    dt: float
    potential: Potential = field(default_factory=double_well)

    def __post_init__(self):
        if self.kind not in (KIND_CHAIN, KIND_GRID):
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}")
        min_n = 1 if self.kind == KIND_CHAIN else 2
        if self.n < min_n:
            raise InvalidArgumentError(f"n must be >= {min_n} for kind {self.kind}")
        if self.gamma <= 0:
            raise InvalidArgumentError("gamma must be positive")
        if self.epsilon < 0:
            raise InvalidArgumentError("epsilon must be nonnegative")
        if self.dt <= 0:
            raise InvalidArgumentError("dt must be positive")

    @property
    def dx(self) -> float:
        """Mesh size of the grid kind; nodes sit at i*dx, i = 0..N-1."""
        if self.kind != KIND_GRID:
            raise InvalidArgumentError("dx is only defined for the grid kind")
        return 1.0 / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)


def check_state(params: ModelParams, x) -> np.ndarray:
    """Validate and return ``x`` as a float array of length ``params.n``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size != params.n:
        raise InvalidStateError(f"state must have length {params.n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError("state contains non-finite entries")
    return arr


def _weights(params: ModelParams) -> tuple[float, float]:
    """(coupling, on-site) prefactors so that E = coupling/2 * sum d^2 + onsite * sum V."""
    if params.kind == KIND_CHAIN:
        return params.gamma * params.n, 1.0 / params.n
    dx = params.dx
    return params.gamma / dx, dx


def energy(params: ModelParams, x) -> float:
    """Total energy of a configuration."""
    x = check_state(params, x)
    c, w = _weights(params)
    d = np.diff(x)
    return float(0.5 * c * np.dot(d, d) + w * np.sum(params.potential.v(x)))


def energy_split(params: ModelParams, x) -> tuple[float, float]:
    """Decompose the energy as E = gamma * dirichlet + potential."""
    x = check_state(params, x)
    c, w = _weights(params)
    d = np.diff(x)
    dirichlet = 0.5 * (c / params.gamma) * float(np.dot(d, d))
    potential = w * float(np.sum(params.potential.v(x)))
    return dirichlet, potential


def _mirror_laplacian(x: np.ndarray) -> np.ndarray:
    """Unscaled second difference with mirror ghosts (x_{-1}=x_0, x_N=x_{N-1})."""
    lap = np.empty_like(x)
    if x.size == 1:
        lap[0] = 0.0
        return lap
    lap[1:-1] = x[:-2] + x[2:] - 2.0 * x[1:-1]
    lap[0] = x[1] - x[0]
    lap[-1] = x[-2] - x[-1]
    return lap


def grad_energy(params: ModelParams, x) -> np.ndarray:
    """Gradient of ``energy`` with respect to the configuration."""
    x = check_state(params, x)
    c, w = _weights(params)
    return -c * _mirror_laplacian(x) + w * params.potential.dv(x)


def hessian_energy(params: ModelParams, x) -> np.ndarray:
    """Dense symmetric tridiagonal Hessian of ``energy`` at ``x``."""
    x = check_state(params, x)
    c, w = _weights(params)
    n = params.n
    h = np.zeros((n, n))
    diag = w * params.potential.d2v(x)
    if n > 1:
        coupling_diag = np.full(n, 2.0 * c)
        coupling_diag[0] = coupling_diag[-1] = c
        diag = diag + coupling_diag
        off = np.full(n - 1, -c)
        h[np.arange(n - 1), np.arange(1, n)] = off
        h[np.arange(1, n), np.arange(n - 1)] = off
    np.fill_diagonal(h, diag)
    return h


def log_gibbs_density_unnormalized(params: ModelParams, x) -> float:
    """Log of the unnormalized Gibbs density, -E(x)/epsilon."""
    if params.epsilon == 0:
        raise ZeroDivisionError("Gibbs density is undefined at zero temperature")
    return -energy(params, x) / params.epsilon


def rate_functional(params: ModelParams, traj, dt: float) -> float:
    """Discrete large-deviation action of a trajectory.

    Forward differences approximate the velocity and the drift is evaluated
    at the left endpoint:

        I = (1/4) * sum_k |(x_{k+1}-x_k)/dt + grad E(x_k)|^2 * dt

    The action vanishes (to discretization error) along the deterministic
    downhill flow x' = -grad E(x).
    """
    states = [check_state(params, s) for s in traj]
    if len(states) < 2:
        raise InvalidArgumentError("trajectory needs at least 2 states")
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    total = 0.0
    for k in range(len(states) - 1):
        ctrl = (states[k + 1] - states[k]) / dt + grad_energy(params, states[k])
        total += float(np.dot(ctrl, ctrl))
    return 0.25 * total * dt


def kappa_from_gamma(gamma: float, n: int = 2) -> float:
    """Coupling parameter of the rescaled drift, kappa = gamma * n^2.

    For the two-particle chain the gradient system, multiplied through by N,
    reads (x^3 - x + kappa*(x - y), y^3 - y - kappa*(x - y)) with
    kappa = 4*gamma; the bifurcation analysis is phrased in kappa.
    """
    return gamma * n * n


def gamma_from_kappa(kappa: float, n: int = 2) -> float:
    """Inverse of :func:`kappa_from_gamma`."""
    return kappa / (n * n)


def rescaled_two_particle_params(kappa: float, epsilon: float, dt: float) -> "ModelParams":
    """Chain parameters whose Euler steps realize the rescaled 2-d system.

    The rescaled energy (drift x^3 - x + kappa*(x-y)) equals twice the chain
    energy at gamma = kappa/4, so one Euler step of the rescaled system at
    temperature ``epsilon`` and step ``dt`` is exactly one chain Euler step at
    (gamma=kappa/4, epsilon/2, 2*dt): the drift increment and the noise scale
    sqrt(2*epsilon*dt) both match term by term.
    """
    if kappa <= 0:
        raise InvalidArgumentError("kappa must be positive")
    return ModelParams(kind=KIND_CHAIN, n=2, gamma=kappa / 4.0, epsilon=epsilon / 2.0, dt=2.0 * dt)
