"""Limiting reduced density matrix and its large-J Gibbs behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import SystemSpec
from .reservoir import DomainError, ReservoirModel
from .selfconsistent import solve_real_axis
from . import thermo

__all__ = [
    "GibbsReport",
    "trace_distance",
    "gibbs_reference",
    "reduced_dm_limit",
    "gibbs_ratio_scan",
    "canonical_reduced_dm",
]


@dataclass
class GibbsReport:
    j_list: list
    epsilon: float
    beta: float
    trace_distances: list
    fitted_rate: float
    ratio_deviations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "J_list": [int(j) for j in self.j_list],
            "epsilon": float(self.epsilon),
            "beta": float(self.beta),
            "trace_distances": [float(d) for d in self.trace_distances],
            "fitted_rate": float(self.fitted_rate),
            "ratio_deviations": [float(d) for d in self.ratio_deviations],
        }


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def _normalize_state(m: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Hermitize, clip tiny negative eigenvalues, normalize the trace."""
    m = 0.5 * (m + np.asarray(m).conj().T)
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, floor, None)
    rho = (vecs * vals) @ vecs.conj().T
    return rho / np.trace(rho).real


def gibbs_reference(h_s, beta: float) -> np.ndarray:
    """Canonical state e^{-beta H_S} / Tr e^{-beta H_S}."""
    h_s = np.asarray(h_s, dtype=complex)
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    vals, vecs = np.linalg.eigh(h_s)
    w = np.exp(-beta * (vals - vals.min()))
    w /= w.sum()
    return (vecs * w) @ vecs.conj().T


def reduced_dm_limit(sys: SystemSpec, model: ReservoirModel, e: float,
                     tol: float = 1e-10, route: str = "auto") -> np.ndarray:
    """Limiting reduced density matrix gamma(E) / Tr gamma(E)."""
    sol = solve_real_axis(sys, model, e, tol=tol, route=route)
    gamma = sol.imag_part() / np.pi
    tr = float(np.trace(gamma).real)
    if tr <= 1e-14:
        raise DomainError(
            f"E = {e:g} is outside the spectral support (Tr gamma = {tr:.3e})")
    return _normalize_state(gamma)


def gibbs_ratio_scan(sys: SystemSpec, model: ReservoirModel, epsilon: float,
                     j_list, tol: float = 1e-10) -> GibbsReport:
    """Trace distance to the Gibbs state along a ladder of block counts.

    For each J the reduced density matrix at macroscopic energy E = J eps is
    compared against e^{-beta H_S}/Z with beta = beta(eps); the unnormalized
    ratio gamma_J(J eps) / mu_J(eps) is compared against e^{-beta H_S}
    directly.  The decay exponent is fitted on the last three J points.
    """
    j_list = [int(j) for j in j_list]
    beta = thermo.saddle_beta(model, epsilon)
    ref = gibbs_reference(sys.h_s, beta)

    vals, vecs = np.linalg.eigh(np.asarray(sys.h_s, dtype=complex))
    exp_mbh = (vecs * np.exp(-beta * vals)) @ vecs.conj().T

    distances = []
    ratio_devs = []
    for j in j_list:
        mj = model.with_j(j)
        sol = solve_real_axis(sys, mj, j * epsilon, tol=tol)
        gamma = sol.imag_part() / np.pi
        tr = float(np.trace(gamma).real)
        if tr <= 1e-14:
            raise DomainError(f"J = {j}: J*eps outside spectral support")
        distances.append(trace_distance(_normalize_state(gamma), ref))
        mu = thermo.darwin_fowler_mu(mj, epsilon)
        ratio_devs.append(float(np.linalg.norm(gamma / mu - exp_mbh, 2)))

    tail = min(3, len(j_list))
    rate = float(np.polyfit(np.log(j_list[-tail:]),
                            np.log(np.maximum(distances[-tail:], 1e-300)),
                            1)[0]) if tail >= 2 else float("nan")
    return GibbsReport(j_list=j_list, epsilon=float(epsilon), beta=float(beta),
                       trace_distances=distances, fitted_rate=rate,
                       ratio_deviations=ratio_devs)


def canonical_reduced_dm(sys: SystemSpec, model: ReservoirModel, beta: float,
                         J: int | None = None, tol: float = 1e-10,
                         npts: int = 385, width: float = 7.5,
                         mass_tail: float = 1e-10) -> np.ndarray:
    """Reduced density matrix of the canonical composite ensemble.

    Integrates e^{-beta E} gamma_J(E) over the energy range where the tilted
    weight carries mass, by direct quadrature on a Simpson grid (exact at
    finite J, no saddle-point approximation).  The weight concentrates at
    E = J eps* with eps* the energy selected by beta, with spread
    sqrt(J L''(beta)).  Window edges not clipped by the spectral support must
    sit where the large-deviation weight e^{J(s(eps) - beta eps)} has dropped
    below ``mass_tail`` relative to its peak.
    """
    j = model.J if J is None else int(J)
    mj = model.with_j(j)
    eps_star = thermo.saddle_epsilon(model, beta)
    sigma_e = np.sqrt(j * model.d2log_laplace(beta))
    blo, bhi = mj.block_support()
    margin = 1e-7
    peak_log = j * (thermo.entropy_rate(model, eps_star) - beta * eps_star)

    def log_rel_weight(e: float) -> float:
        return j * (thermo.entropy_rate(model, e / j) - beta * e / j) - peak_log

    def settle_edge(direction: float) -> float:
        """March outward until the weight has dropped below mass_tail or the
        spectral support cuts the window off."""
        dist = width * sigma_e
        for _ in range(200):
            edge = j * eps_star + direction * dist
            if direction < 0 and np.isfinite(blo) and edge <= j * blo:
                return j * blo + margin * max(1.0, abs(j * blo))
            if direction > 0 and np.isfinite(bhi) and edge >= j * bhi:
                return j * bhi - margin * max(1.0, abs(j * bhi))
            if log_rel_weight(edge) <= np.log(mass_tail):
                return edge
            dist += 2.0 * sigma_e
        raise DomainError(
            "canonical grid truncation insufficient: weighted mass estimate "
            f"{np.exp(log_rel_weight(edge)):.3e} never fell below "
            f"{mass_tail:.1e}")

    lo = settle_edge(-1.0)
    hi = settle_edge(+1.0)
    if not hi > lo:
        raise DomainError("canonical weight window is empty")

    # keep the Simpson step tied to the weight's width
    npts = max(npts, int(npts * (hi - lo) / (15.0 * sigma_e)) + 1)
    if npts % 2 == 0:
        npts += 1
    grid = np.linspace(lo, hi, npts)
    e0 = j * eps_star
    num = np.zeros((sys.n, sys.n), dtype=complex)
    weights = _simpson_weights(npts, grid[1] - grid[0])
    f_prev = None
    for i, e in enumerate(grid):
        sol = solve_real_axis(sys, mj, float(e), tol=tol, f0=f_prev)
        f_prev = sol.value
        gamma = sol.imag_part() / np.pi
        num += weights[i] * np.exp(-beta * (e - e0)) * gamma
    return _normalize_state(num)


def _simpson_weights(npts: int, h: float) -> np.ndarray:
    w = np.ones(npts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0
