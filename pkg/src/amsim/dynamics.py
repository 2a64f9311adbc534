"""Time integrators: Euler-Maruyama for the particle chain and the
semi-implicit splitting scheme for the stochastic Allen-Cahn grid.

The splitting scheme composes, per time step of size dt,

    (I - (gamma*dt/4) L) x' = (I + (gamma*dt/4) L) x + (1/2) sqrt(2 eps dt) W
    x''  = exact flow of  dy/dt = -(y^3 - y)  over dt, nodewise
    (I - (gamma*dt/4) L) x''' = (I + (gamma*dt/4) L) x'' + (1/2) sqrt(2 eps dt) W

where L is the mirror-ghost (Neumann) discrete Laplacian scaled by 1/dx^2 and
W is the spatial white-noise field.  Both heat half-steps reuse the same
noise realization by default, which gives total per-step noise
sqrt(2 eps dt) W and matches the Euler-Maruyama variance budget; independent
half-step noises are available behind ``shared_noise=False`` for sensitivity
studies.  A plain Lie composition (one full heat step, then the reaction
flow) is available via ``scheme="lie"``.

All steppers are pure functions of (config, state, rng key): no global RNG
state exists anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError
from .model import KIND_CHAIN, KIND_GRID, ModelParams, check_state
from .rng import RngKey, normals_for_key

GRID_NOISE = "grid"


@dataclass
class StepperConfig:
    """Integrator configuration with precomputed solver factorizations.

    ``noise_truncation`` is either the sentinel ``"grid"`` (i.i.d. normals
    per node scaled by 1/sqrt(dx)) or an integer J selecting the spectral
    field sum_{j<=J} G_j e_j with the Neumann cosine basis.
    ``reaction_substep=False`` replaces the nonlinear flow by the identity
    (test hook for the linear stochastic heat statistics).
    ``heat_solver_tolerance`` is reserved; the tridiagonal solve is direct.
    """

    params: ModelParams
    noise_truncation: object = GRID_NOISE
    heat_solver_tolerance: float = 0.0
    scheme: str = "strang"
    shared_noise: bool = True
    reaction_substep: bool = True
    basis: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        p = self.params
        if self.scheme not in ("strang", "lie"):
            raise InvalidArgumentError(f"unknown scheme {self.scheme!r}")
        spectral = self.noise_truncation != GRID_NOISE
        if spectral:
            j = self.noise_truncation
            if not isinstance(j, (int, np.integer)) or isinstance(j, bool):
                raise InvalidArgumentError("noise_truncation must be 'grid' or an integer")
            if p.kind != KIND_GRID:
                raise InvalidArgumentError("spectral noise requires the grid kind")
            if not 0 <= j <= p.n:
                raise InvalidArgumentError("noise truncation must satisfy 0 <= J <= N")
        self.spectral = spectral
        if p.kind == KIND_CHAIN:
            self.noise_scale = np.sqrt(2.0 * p.epsilon * p.dt)
            self.field_size = p.n
        else:
            dx = p.dx
            half = 0.5 * np.sqrt(2.0 * p.epsilon * p.dt)
            full = np.sqrt(2.0 * p.epsilon * p.dt)
            if spectral:
                nodes = p.nodes
                j = int(self.noise_truncation)
                basis = np.empty((p.n, j + 1))
                basis[:, 0] = 1.0
                for m in range(1, j + 1):
                    basis[:, m] = np.sqrt(2.0) * np.cos(m * np.pi * nodes)
                self.basis = basis
                self.field_size = j + 1
                self.cn_half, self.cn_full = half, full
            else:
                self.field_size = p.n
                # white-noise coefficients absorb the 1/sqrt(dx) grid scaling
                self.cn_half = half / np.sqrt(dx)
                self.cn_full = full / np.sqrt(dx)
            self.em = np.exp(-2.0 * p.dt) if self.reaction_substep else 1.0
            self.b_half, self.cp_half, self.den_half = _thomas(p, p.gamma * p.dt / 4.0)
            self.b_full, self.cp_full, self.den_full = _thomas(p, p.gamma * p.dt / 2.0)
        two = p.kind == KIND_GRID and self.scheme == "strang" and not self.shared_noise
        self.draws_per_step = 2 * self.field_size if two else self.field_size
        self.two_noise = two
        self.fast_path = p.potential.standard_double_well and not spectral

    def kernel_args(self):
        """(cn, em, b, cp, den, strang) for the compiled grid kernels."""
        if self.scheme == "strang":
            return self.cn_half, self.em, self.b_half, self.cp_half, self.den_half, True
        return self.cn_full, self.em, self.b_full, self.cp_full, self.den_full, False


def _thomas(params: ModelParams, a: float):
    """Factor I - (a/dx^2)*Lhat, Lhat the unscaled mirror second difference."""
    n = params.n
    b = a / params.dx**2
    diag = np.full(n, 1.0 + 2.0 * b)
    diag[0] = diag[-1] = 1.0 + b
    cp = np.empty(n - 1)
    den = np.empty(n)
    den[0] = diag[0]
    cp[0] = -b / den[0]
    for i in range(1, n):
        den[i] = diag[i] + b * cp[i - 1]
        if i < n - 1:
            cp[i] = -b / den[i]
    return b, cp, den


def gaussian_field(cfg: StepperConfig, key: RngKey) -> np.ndarray:
    """One spatial white-noise sample (grid or truncated-spectral realization)."""
    if cfg.params.kind != KIND_GRID:
        raise InvalidArgumentError("gaussian_field is defined for the grid kind")
    g = normals_for_key(key, cfg.field_size)
    if cfg.spectral:
        return cfg.basis @ g
    return g / np.sqrt(cfg.params.dx)


def euler_step(cfg: StepperConfig, x, key: RngKey) -> np.ndarray:
    """Euler-Maruyama step x - grad E(x) dt + sqrt(2 eps dt) G for the chain."""
    p = cfg.params
    if p.kind != KIND_CHAIN:
        raise InvalidArgumentError("euler_step requires the particle-chain kind")
    from .model import grad_energy

    x = check_state(p, x)
    g = normals_for_key(key, p.n)
    return x - grad_energy(p, x) * p.dt + cfg.noise_scale * g


def bernoulli_flow(y, t: float):
    """Exact flow of dy/dt = -(y^3 - y): Y(t) = y / sqrt(y^2 + (1-y^2) e^{-2t})."""
    if t < 0:
        raise InvalidArgumentError("flow time must be nonnegative")
    y = np.asarray(y, dtype=float)
    em = np.exp(-2.0 * t)
    out = y / np.sqrt(y * y + (1.0 - y * y) * em)
    return float(out) if out.ndim == 0 else out


def heat_half_step(cfg: StepperConfig, x, noise) -> np.ndarray:
    """One semi-implicit heat half-step with explicit noise field.

    Solves (I - (gamma dt/4) L) x' = (I + (gamma dt/4) L) x
    + (1/2) sqrt(2 eps dt) * noise by the precomputed Thomas factorization.
    """
    p = cfg.params
    if p.kind != KIND_GRID:
        raise InvalidArgumentError("heat_half_step requires the grid kind")
    x = check_state(p, x).copy()
    noise = check_state(p, noise)
    cn = 0.5 * np.sqrt(2.0 * p.epsilon * p.dt)
    rhs = np.empty(p.n)
    _kernels.heat_half(x, noise, cn, cfg.b_half, cfg.cp_half, cfg.den_half, rhs)
    return x


def step_with_normals(cfg: StepperConfig, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Advance one step consuming a pre-drawn normal vector (len draws_per_step).

    This is the single code path shared by the public steppers and the
    replica simulation loops, so sequential and keyed access round
    identically.
    """
    p = cfg.params
    if p.kind == KIND_CHAIN:
        from .model import grad_energy

        return x - grad_energy(p, x) * p.dt + cfg.noise_scale * g
    m = cfg.field_size
    if cfg.spectral:
        g1 = cfg.basis @ g[:m]
        g2 = cfg.basis @ g[m:] if cfg.two_noise else g1
    else:
        g1 = g[:m]
        g2 = g[m:] if cfg.two_noise else g1
    out = x.copy()
    cn, em, b, cp, den, strang = cfg.kernel_args()
    _kernels.ac_step(out, g1, g2, cn, em, b, cp, den, np.empty(p.n), strang)
    return out


def allen_cahn_step(cfg: StepperConfig, x, key: RngKey) -> np.ndarray:
    """One full splitting step of the stochastic Allen-Cahn grid."""
    p = cfg.params
    if p.kind != KIND_GRID:
        raise InvalidArgumentError("allen_cahn_step requires the grid kind")
    x = check_state(p, x)
    g = normals_for_key(key, cfg.draws_per_step)
    return step_with_normals(cfg, x, g)
