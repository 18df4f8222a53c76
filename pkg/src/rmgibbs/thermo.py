"""Legendre/saddle-point thermodynamics of the reservoir blocks.

Sign conventions are pinned by the gaussian closed form: the entropy rate
s(eps) = lim_J J^{-1} log nu_J(J eps) is concave and <= 0 with equality at the
block mean, beta(eps) = s'(eps), and the sharpened density approximation is
mu_J(eps) = (2 pi J L''(beta))^{-1/2} e^{J s(eps)} with L = log psi.  For the
gaussian family mu_J reproduces nu_J(J eps) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reservoir import DomainError, ReservoirModel

__all__ = [
    "ThermoPoint",
    "saddle_beta",
    "saddle_epsilon",
    "entropy_rate",
    "darwin_fowler_mu",
    "tilted_density",
    "free_energy",
    "thermo_point",
]


@dataclass(frozen=True)
class ThermoPoint:
    epsilon: float
    beta: float
    entropy_rate: float
    lambda2: float  # variance of the tilted block density, L''(beta)
    mu_j: float


def _attainable_range(model: ReservoirModel) -> tuple[float, float]:
    lo, hi = model.block_support()
    return lo, hi


def saddle_beta(model: ReservoirModel, epsilon: float, *,
                max_iter: int = 200) -> float:
    """Unique beta with -(log psi)'(beta) = epsilon.

    Safeguarded Newton: the map beta -> -L'(beta) is strictly decreasing
    (L'' > 0), so a sign-change bracket is found by doubling and Newton steps
    are projected into it.
    """
    lo, hi = _attainable_range(model)
    if not (lo < epsilon < hi):
        raise DomainError(
            f"epsilon = {epsilon:g} outside attainable range ({lo:g}, {hi:g})")

    def g(beta: float) -> float:
        return -model.dlog_laplace(beta) - epsilon

    # bracket [b_lo, b_hi] with g(b_lo) > 0 > g(b_hi)
    g0 = g(0.0)
    tol = 1e-12 * max(1.0, abs(epsilon))
    if abs(g0) <= tol:
        return 0.0
    if g0 > 0:
        b_lo = 0.0
        step = 1.0
        b_hi = step
        for _ in range(max_iter):
            if g(b_hi) < 0:
                break
            b_lo = b_hi
            step *= 2.0
            b_hi += step
        else:
            raise DomainError("epsilon not attainable: no bracket above beta=0")
    else:
        b_hi = 0.0
        if model.family == "exponential":
            bmin = -1.0 / model.epsilon0
            frac = 0.5
            for _ in range(max_iter):
                b_lo = bmin + frac * (b_hi - bmin)
                if g(b_lo) > 0:
                    break
                frac *= 0.5
            else:
                raise DomainError("epsilon not attainable near psi boundary")
        else:
            step = 1.0
            b_lo = -step
            for _ in range(max_iter):
                if g(b_lo) > 0:
                    break
                step *= 2.0
                b_lo -= step
            else:
                raise DomainError("epsilon not attainable: no bracket below beta=0")

    beta = 0.5 * (b_lo + b_hi)
    for _ in range(max_iter):
        val = g(beta)
        if abs(val) <= tol:
            return beta
        if val > 0:
            b_lo = beta
        else:
            b_hi = beta
        step = val / model.d2log_laplace(beta)  # g' = -L''
        cand = beta + step
        beta = cand if b_lo < cand < b_hi else 0.5 * (b_lo + b_hi)
    raise RuntimeError("saddle point iteration did not converge")


def saddle_epsilon(model: ReservoirModel, beta: float) -> float:
    """Inverse of saddle_beta: the energy per block selected by beta."""
    return -model.dlog_laplace(beta)


def entropy_rate(model: ReservoirModel, epsilon: float) -> float:
    """s(eps) = eps beta + log psi(beta) at the saddle; s <= 0."""
    beta = saddle_beta(model, epsilon)
    return epsilon * beta + model.log_laplace(beta)


def darwin_fowler_mu(model: ReservoirModel, epsilon: float,
                     J: int | None = None) -> float:
    """Sharpened saddle-point density mu_J(eps) ~ nu_J(J eps)."""
    j = model.J if J is None else int(J)
    beta = saddle_beta(model, epsilon)
    s = epsilon * beta + model.log_laplace(beta)
    lam2 = model.d2log_laplace(beta)
    return float(np.exp(j * s) / np.sqrt(2.0 * np.pi * j * lam2))


def tilted_density(model: ReservoirModel, beta: float, epsilon_grid):
    """Exponentially tilted block density Q(e) = e^{-beta e} q(e) / psi(beta)."""
    grid = np.asarray(epsilon_grid, dtype=float)
    log_psi = model.log_laplace(beta)
    expo = -beta * grid - log_psi
    if np.any(expo > 700.0):
        raise OverflowError("tilted density overflows on this grid")
    return model.block_density(grid) * np.exp(expo)


def free_energy(model: ReservoirModel, beta: float,
                J: int | None = None) -> tuple[float, float | None]:
    """Partition function Z_J = psi(beta)^J and free energy per block.

    At beta = 0 the free energy is undefined; only Z_J (= 1) is returned.
    """
    j = model.J if J is None else int(J)
    log_psi = model.log_laplace(beta)
    if j * log_psi > 700.0:
        raise OverflowError("Z_J overflows; use log_laplace directly")
    z = float(np.exp(j * log_psi))
    if beta == 0.0:
        return z, None
    return z, float(-log_psi / beta)


def thermo_point(model: ReservoirModel, epsilon: float,
                 J: int | None = None) -> ThermoPoint:
    j = model.J if J is None else int(J)
    beta = saddle_beta(model, epsilon)
    s = epsilon * beta + model.log_laplace(beta)
    lam2 = model.d2log_laplace(beta)
    mu = float(np.exp(j * s) / np.sqrt(2.0 * np.pi * j * lam2))
    return ThermoPoint(epsilon=float(epsilon), beta=float(beta),
                       entropy_rate=float(s), lambda2=float(lam2), mu_j=mu)
