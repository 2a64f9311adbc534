"""Critical-point structure of the two-particle energy.

Works in the rescaled coupling parameter kappa (= 4*gamma for N=2, see
:func:`amsim.model.kappa_from_gamma`), for which the gradient system reads

    (x^3 - x + kappa*(x - y),  y^3 - y - kappa*(x - y)).

The closed-form root families are polished by a few Newton iterations before
being returned, which guards against transcription slips in the closed
forms, and every returned point carries its residual drift norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParameterError, InvalidArgumentError

#: eigenvalues with magnitude below this are treated as zero
ZERO_EIG = 1e-9

REGIME_SINGLE = "single-saddle"
REGIME_TWO = "two-saddles"
REGIME_FOUR = "four-saddles"


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    hessian_eigenvalues: np.ndarray
    classification: str
    residual: float


@dataclass(frozen=True)
class NormalFormEval:
    a: float
    value: float
    branch: str


def _drift(p: np.ndarray, kappa: float) -> np.ndarray:
    x, y = p
    return np.array([
        x**3 - x + kappa * (x - y),
        y**3 - y - kappa * (x - y),
    ])


def _hessian(p: np.ndarray, kappa: float) -> np.ndarray:
    x, y = p
    return np.array([
        [3.0 * x * x - 1.0 + kappa, -kappa],
        [-kappa, 3.0 * y * y - 1.0 + kappa],
    ])


def _polish(p: np.ndarray, kappa: float, iterations: int = 5) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    for _ in range(iterations):
        f = _drift(p, kappa)
        if np.linalg.norm(f) < 1e-14:
            break
        p = p - np.linalg.solve(_hessian(p, kappa), f)
    return p


def _classify(eigs: np.ndarray) -> str:
    if np.any(np.abs(eigs) < ZERO_EIG):
        return "degenerate"
    negative = int(np.sum(eigs < 0.0))
    if negative == 0:
        return "minimum"
    if negative == len(eigs):
        return "maximum"
    return f"saddle-index-{negative}"


def critical_points_2d(kappa: float):
    """All critical points of the two-particle energy, classified.

    Counts follow the regime structure: 3 points for kappa >= 1/2, 5 for
    1/3 <= kappa < 1/2 (the anti-diagonal pair appears), 9 for kappa < 1/3
    (two extra saddle pairs).  Sorted by coordinates.
    """
    if not np.isfinite(kappa) or kappa <= 0:
        raise InvalidArgumentError("kappa must be positive and finite")
    candidates = [np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([-1.0, -1.0])]
    if kappa < 0.5:
        s = np.sqrt(1.0 - 2.0 * kappa)
        candidates += [np.array([s, -s]), np.array([-s, s])]
    if kappa < 1.0 / 3.0:
        disc = np.sqrt((kappa + 1.0) * (1.0 - 3.0 * kappa))
        for branch_sign in (1.0, -1.0):
            r = (1.0 - kappa + branch_sign * disc) / 2.0
            if r <= 0:
                continue
            x = np.sqrt(r)
            for sx in (1.0, -1.0):
                xx = sx * x
                yy = xx * (xx * xx - 1.0 + kappa) / kappa
                candidates.append(np.array([xx, yy]))
    points = []
    for cand in candidates:
        p = _polish(cand, kappa)
        if any(np.hypot(*(p - q.location)) < 1e-8 for q in points):
            continue
        residual = float(np.linalg.norm(_drift(p, kappa)))
        eigs = np.sort(np.linalg.eigvalsh(_hessian(p, kappa)))
        points.append(CriticalPoint(p, eigs, _classify(eigs), residual))
    points.sort(key=lambda cp: (cp.location[0], cp.location[1]))
    return points


def normal_form_2d(a: float, kappa: float) -> NormalFormEval:
    """Effective one-dimensional functional near the origin bifurcation.

    Outer branch A^4/2 - A^2; for |A| < sqrt((1-2*kappa)/3) the transverse
    direction relaxes to a nonzero amplitude and contributes
    -(1 - 2*kappa - 3*A^2)^2 / 2.  Continuous across the branch boundary.
    """
    if not np.isfinite(a) or not np.isfinite(kappa):
        raise InvalidArgumentError("arguments must be finite")
    if kappa <= 0:
        raise InvalidArgumentError("kappa must be positive")
    outer = a**4 / 2.0 - a**2
    if kappa < 0.5 and 3.0 * a * a < 1.0 - 2.0 * kappa:
        c = 1.0 - 2.0 * kappa - 3.0 * a * a
        return NormalFormEval(a, outer - c * c / 2.0, "inner")
    return NormalFormEval(a, outer, "outer")


def transverse_minimum(a: float, kappa: float) -> float:
    """Exact minimum over rho of :func:`transverse_profile`."""
    c = 1.0 - 2.0 * kappa - 3.0 * a * a
    return -c * c / 2.0 if c > 0 else 0.0


def transverse_profile(rho, a: float, kappa: float):
    """The transverse functional rho^4/2 - (1-2k) rho^2 + 3 rho^2 A^2."""
    rho = np.asarray(rho, dtype=float)
    return rho**4 / 2.0 - rho**2 * (1.0 - 2.0 * kappa) + 3.0 * rho**2 * a * a


def hessian_spectrum_origin(n: int, gamma: float) -> np.ndarray:
    """Closed-form Hessian spectrum at the origin for N = 2 or 4.

    For N=2 the spectrum is reported in the kappa normalization (energy
    scaled by 2, kappa = 4*gamma): {-1, 2*kappa - 1}.  For N=4 it is the
    spectrum of the chain Hessian itself:
    {-1/4, 8*gamma - 1/4, (8 +- 4*sqrt(2))*gamma - 1/4}.
    """
    if gamma <= 0:
        raise InvalidArgumentError("gamma must be positive")
    if n == 2:
        kappa = 4.0 * gamma
        return np.sort(np.array([-1.0, 2.0 * kappa - 1.0]))
    if n == 4:
        r = 4.0 * np.sqrt(2.0)
        return np.sort(np.array([
            -0.25,
            8.0 * gamma - 0.25,
            (8.0 + r) * gamma - 0.25,
            (8.0 - r) * gamma - 0.25,
        ]))
    raise InvalidArgumentError("closed-form spectra are available for N in {2, 4}")


def classify_regime_2d(kappa: float) -> str:
    """Critical-point regime of the two-particle energy.

    single-saddle for kappa > 1/2, two-saddles on (1/3, 1/2), four-saddles
    on (0, 1/3).  The boundary values are degenerate and rejected.
    """
    if not np.isfinite(kappa) or kappa <= 0:
        raise InvalidArgumentError("kappa must be positive and finite")
    for boundary in (0.5, 1.0 / 3.0):
        if abs(kappa - boundary) < 1e-12:
            raise DegenerateParameterError(f"kappa = {kappa} sits on a bifurcation boundary")
    if kappa > 0.5:
        return REGIME_SINGLE
    if kappa > 1.0 / 3.0:
        return REGIME_TWO
    return REGIME_FOUR
