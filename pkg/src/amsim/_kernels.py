"""Compiled inner loops for the time integrators and the Monte-Carlo drivers.

Everything here is specialized to the built-in quartic double well; models
with custom potentials fall back to the slower per-step Python path in
:mod:`amsim.rare_event`.  The kernels release the GIL so replica simulation
can be threaded.

Step/noise layout contract: step ``t`` of a stream consumes row ``t % 256``
of noise block ``t // 256`` (see :mod:`amsim.rng`).  Reaction-coordinate
levels are sequential left-to-right sums so that Python and compiled paths
agree bitwise.
"""

import numpy as np
from numba import njit

STATUS_RUNNING = 0
STATUS_HIT_A = 1
STATUS_HIT_B = 2
STATUS_TIMEOUT = 3


@njit(cache=True, nogil=True)
def seq_mean(x):
    """Left-to-right mean; the canonical reaction-coordinate reduction."""
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i]
    return s / x.shape[0]


@njit(cache=True, nogil=True)
def dw_euler_step(x, out, g, dt, c, w, sig):
    """One Euler step of the double-well chain into ``out``.

    ``c`` is the coupling prefactor (gamma*N), ``w`` the on-site weight (1/N)
    and ``sig`` the noise amplitude sqrt(2*eps*dt).  Mirror ghosts at both
    ends.
    """
    n = x.shape[0]
    for i in range(n):
        if n == 1:
            lap = 0.0
        elif i == 0:
            lap = x[1] - x[0]
        elif i == n - 1:
            lap = x[n - 2] - x[n - 1]
        else:
            lap = x[i - 1] + x[i + 1] - 2.0 * x[i]
        gr = -c * lap + w * (x[i] * x[i] * x[i] - x[i])
        out[i] = x[i] - gr * dt + sig * g[i]


@njit(cache=True, nogil=True)
def heat_half(x, g, cn, b, cp, den, rhs):
    """Semi-implicit heat update in place.

    Solves (I - b*Lhat) x' = (I + b*Lhat) x + cn*g, where Lhat is the
    unscaled mirror-ghost second difference, via a precomputed Thomas
    factorization (``cp`` modified superdiagonal, ``den`` pivots).
    """
    n = x.shape[0]
    for i in range(n):
        if i == 0:
            lap = x[1] - x[0]
        elif i == n - 1:
            lap = x[n - 2] - x[n - 1]
        else:
            lap = x[i - 1] + x[i + 1] - 2.0 * x[i]
        rhs[i] = x[i] + b * lap + cn * g[i]
    x[0] = rhs[0] / den[0]
    for i in range(1, n):
        x[i] = (rhs[i] + b * x[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


@njit(cache=True, nogil=True)
def ac_step(x, g1, g2, cn, em, b, cp, den, rhs, strang):
    """One splitting step of the stochastic Allen-Cahn grid, in place.

    Strang variant: heat half-step, exact reaction flow over dt, heat
    half-step (``g1``/``g2`` are the noise of the two half-steps; pass the
    same array twice for the shared-noise scheme).  With ``strang`` false the
    plain Lie composition is taken: one full heat step (caller passes the
    full-step coefficients) followed by the reaction flow.  ``em`` is
    exp(-2*dt); em = 1 turns the reaction substep into the identity.
    """
    n = x.shape[0]
    heat_half(x, g1, cn, b, cp, den, rhs)
    for i in range(n):
        y = x[i]
        x[i] = y / np.sqrt(y * y + (1.0 - y * y) * em)
    if strang:
        heat_half(x, g2, cn, b, cp, den, rhs)


@njit(cache=True, nogil=True)
def chain_advance(x, scratch, noise, nrows, dt, c, w, sig, z_a, z_b,
                  record, states, levels, base):
    """Advance a chain replica through up to ``nrows`` rows of one noise block.

    Appends post-step states/levels at indices base+1.. when recording.
    Returns (steps_taken, status)."""
    used = 0
    status = STATUS_RUNNING
    n = x.shape[0]
    for r in range(nrows):
        dw_euler_step(x, scratch, noise[r], dt, c, w, sig)
        for i in range(n):
            x[i] = scratch[i]
        lev = seq_mean(x)
        used += 1
        if record:
            for i in range(n):
                states[base + used, i] = x[i]
            levels[base + used] = lev
        if lev < z_a:
            status = STATUS_HIT_A
            break
        if lev > z_b:
            status = STATUS_HIT_B
            break
    return used, status


@njit(cache=True, nogil=True)
def grid_advance(x, rhs, noise, nrows, cn, em, b, cp, den, strang, two_noise,
                 z_a, z_b, record, states, levels, base):
    """Allen-Cahn analogue of :func:`chain_advance`.

    Each noise row holds n draws (shared noise) or 2n draws (independent
    half-step noise, selected by ``two_noise``)."""
    used = 0
    status = STATUS_RUNNING
    n = x.shape[0]
    for r in range(nrows):
        g1 = noise[r, :n]
        if two_noise:
            g2 = noise[r, n:2 * n]
        else:
            g2 = g1
        ac_step(x, g1, g2, cn, em, b, cp, den, rhs, strang)
        lev = seq_mean(x)
        used += 1
        if record:
            for i in range(n):
                states[base + used, i] = x[i]
            levels[base + used] = lev
        if lev < z_a:
            status = STATUS_HIT_A
            break
        if lev > z_b:
            status = STATUS_HIT_B
            break
    return used, status


@njit(cache=True, nogil=True)
def mc_chain_chunk(xs, status, steps, noise, dt, c, w, sig, z_a, z_b,
                   max_steps, scratch):
    """Advance a batch of independent chain samples through one noise chunk.

    ``noise`` has shape (rows, batch, n); sample j consumes column j.
    Returns the number of samples still running."""
    batch = xs.shape[0]
    rows = noise.shape[0]
    n = xs.shape[1]
    active = 0
    for j in range(batch):
        if status[j] != STATUS_RUNNING:
            continue
        x = xs[j]
        st = STATUS_RUNNING
        k = steps[j]
        for r in range(rows):
            dw_euler_step(x, scratch, noise[r, j], dt, c, w, sig)
            for i in range(n):
                x[i] = scratch[i]
            k += 1
            lev = seq_mean(x)
            if lev < z_a:
                st = STATUS_HIT_A
                break
            if lev > z_b:
                st = STATUS_HIT_B
                break
            if k >= max_steps:
                st = STATUS_TIMEOUT
                break
        steps[j] = k
        status[j] = st
        if st == STATUS_RUNNING:
            active += 1
    return active


@njit(cache=True, nogil=True)
def mc_grid_chunk(xs, status, steps, noise, cn, em, b, cp, den, strang,
                  two_noise, z_a, z_b, max_steps, rhs):
    """Allen-Cahn analogue of :func:`mc_chain_chunk`."""
    batch = xs.shape[0]
    rows = noise.shape[0]
    n = xs.shape[1]
    active = 0
    for j in range(batch):
        if status[j] != STATUS_RUNNING:
            continue
        x = xs[j]
        st = STATUS_RUNNING
        k = steps[j]
        for r in range(rows):
            g1 = noise[r, j, :n]
            if two_noise:
                g2 = noise[r, j, n:2 * n]
            else:
                g2 = g1
            ac_step(x, g1, g2, cn, em, b, cp, den, rhs, strang)
            k += 1
            lev = seq_mean(x)
            if lev < z_a:
                st = STATUS_HIT_A
                break
            if lev > z_b:
                st = STATUS_HIT_B
                break
            if k >= max_steps:
                st = STATUS_TIMEOUT
                break
        steps[j] = k
        status[j] = st
        if st == STATUS_RUNNING:
            active += 1
    return active
