"""Finite-N Monte Carlo ground truth for the coupled system-reservoir model.

The composite Hamiltonian is H_S x 1_N + 1_n x H_R + Sigma_S x W / sqrt(N)
with W drawn from the Gaussian unitary ensemble and H_R diagonal (levels from
the reservoir model; the GUE law is unitarily invariant, so only the spectrum
of H_R matters).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .numerics import hermitian_eig
from .reservoir import ReservoirModel

__all__ = [
    "SystemSpec",
    "GueSample",
    "EnergyWindow",
    "sample_gue",
    "job_rng",
    "build_composite",
    "reduced_dm_micro",
    "empirical_resolvent",
    "resolvent_via_solve",
    "auto_window",
    "selfaveraging_study",
]


def _hermitian_input(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.abs(m - m.conj().T).max() > 1e-12 * max(1.0, np.abs(m).max()):
        raise ValueError(f"{name} must be Hermitian")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class SystemSpec:
    """Small system: Hamiltonian H_S and coupling shape Sigma_S, both n x n."""

    h_s: np.ndarray
    sigma_s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h_s", _hermitian_input(self.h_s, "H_S"))
        object.__setattr__(self, "sigma_s",
                           _hermitian_input(self.sigma_s, "Sigma_S"))
        if self.h_s.shape != self.sigma_s.shape:
            raise ValueError("H_S and Sigma_S must have the same shape")

    @property
    def n(self) -> int:
        return self.h_s.shape[0]


@dataclass(frozen=True)
class GueSample:
    N: int
    w: np.ndarray = field(repr=False)
    seed: object = None


@dataclass(frozen=True)
class EnergyWindow:
    center: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("window width delta must be positive")

    @property
    def lo(self) -> float:
        return self.center - 0.5 * self.delta

    @property
    def hi(self) -> float:
        return self.center + 0.5 * self.delta


def job_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Deterministic per-job generator from a master seed and a job index path.

    Counter-based split: jobs can run in any order or concurrently and still
    reproduce the same streams.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def sample_gue(N: int, seed=0) -> GueSample:
    """GUE matrix with E|W_jk|^2 = 1 off the diagonal and 2 on it.

    ``seed`` may be an integer or a numpy Generator.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal((N, N))
    h = rng.standard_normal((N, N))
    m = g + 1j * h
    w = 0.5 * (m + m.conj().T)
    np.fill_diagonal(w, np.sqrt(2.0) * np.diag(g))
    w.setflags(write=False)
    return GueSample(N=N, w=w, seed=None if isinstance(seed, np.random.Generator) else seed)


def build_composite(sys: SystemSpec, reservoir_levels, w) -> np.ndarray:
    """H = H_S x 1_N + 1_n x diag(levels) + Sigma_S x W / sqrt(N)."""
    levels = np.asarray(reservoir_levels, dtype=float)
    wm = w.w if isinstance(w, GueSample) else np.asarray(w)
    n_res = len(levels)
    if wm.shape != (n_res, n_res):
        raise ValueError(
            f"W shape {wm.shape} does not match {n_res} reservoir levels")
    n = sys.n
    eye_n = np.eye(n)
    h = np.kron(sys.h_s, np.eye(n_res))
    h += np.kron(eye_n, np.diag(levels))
    h += np.kron(sys.sigma_s, wm) / np.sqrt(n_res)
    return h


def _window_eig(h: np.ndarray, win: EnergyWindow):
    return sla.eigh(h, subset_by_value=(win.lo, win.hi), driver="evr")


def reduced_dm_micro(h: np.ndarray, sys: SystemSpec, win: EnergyWindow):
    """Microcanonical reduced density matrix from the spectral window.

    Returns (rho, e_s_window, count) where e_s_window is the partial trace
    over the reservoir of the spectral projector onto the window, divided by
    N, and rho is e_s_window normalized to unit trace.
    """
    n = sys.n
    big = h.shape[0]
    if big % n != 0:
        raise ValueError("composite dimension is not a multiple of n")
    n_res = big // n
    vals, vecs = _window_eig(h, win)
    count = len(vals)
    if count == 0:
        raise ValueError(
            f"no states in shell ({win.lo:g}, {win.hi:g}); widen delta")
    vr = vecs.reshape(n, n_res, count)
    e_s = np.einsum("ajk,bjk->ab", vr, vr.conj()) / n_res
    e_s = 0.5 * (e_s + e_s.conj().T)
    rho = e_s / np.trace(e_s).real
    return rho, e_s, count


def empirical_resolvent(h: np.ndarray, sys: SystemSpec, z: complex,
                        eig=None) -> np.ndarray:
    """g(z) = N^{-1} Tr_R (H - z)^{-1} via the eigendecomposition of H."""
    if z.imag == 0:
        raise ValueError("z must have nonzero imaginary part")
    n = sys.n
    n_res = h.shape[0] // n
    if eig is None:
        eig = hermitian_eig(h)
    weights = 1.0 / (eig.values - z)
    vr = eig.vectors.reshape(n, n_res, len(eig.values))
    g = np.einsum("ajk,bjk,k->ab", vr, vr.conj(), weights) / n_res
    return g


def resolvent_via_solve(h: np.ndarray, n: int, z: complex) -> np.ndarray:
    """Same partial-trace resolvent through a direct linear solve."""
    if z.imag == 0:
        raise ValueError("z must have nonzero imaginary part")
    big = h.shape[0]
    n_res = big // n
    gfull = np.linalg.inv(h - z * np.eye(big))
    return np.einsum("ajbj->ab", gfull.reshape(n, n_res, n, n_res)) / n_res


def auto_window(eigenvalues: np.ndarray, center: float, n: int,
                min_count: int = 50, neighborhood: int = 200) -> EnergyWindow:
    """Window of width 4 n x (local mean level spacing), widened to hold
    at least min_count states."""
    vals = np.sort(np.asarray(eigenvalues))
    idx = np.searchsorted(vals, center)
    lo = max(idx - neighborhood // 2, 0)
    hi = min(lo + neighborhood, len(vals))
    lo = max(hi - neighborhood, 0)
    local = vals[lo:hi]
    if len(local) < 2:
        raise ValueError("not enough eigenvalues to estimate level spacing")
    spacing = (local[-1] - local[0]) / (len(local) - 1)
    delta = 4.0 * spacing * n
    target = min(min_count, len(vals))
    for _ in range(200):
        win = EnergyWindow(center, delta)
        count = int(np.searchsorted(vals, win.hi) - np.searchsorted(vals, win.lo))
        if count >= target:
            return win
        delta *= 1.5
    raise ValueError("could not build a window with the requested occupancy")


def _study_realization(args):
    sys, levels, z, n_value, master_seed, n_index, rep = args
    rng = job_rng(master_seed, n_index, rep)
    w = sample_gue(n_value, rng)
    h = build_composite(sys, levels, w)
    return resolvent_via_solve(h, sys.n, z)


def selfaveraging_study(sys: SystemSpec, model: ReservoirModel, z: complex,
                        n_list, m: int, seed: int = 0, jobs: int = 1,
                        min_im: float = 0.5):
    """Sample variance of the empirical resolvent entries versus N.

    Returns (table, slope) where table rows are
    {"N": N, "variance": n x n array, "mean": n x n array} and slope is the
    log-log fit of the largest entry variance against N.
    """
    if m < 8:
        raise ValueError("need at least 8 realizations per N for a variance")
    if abs(z.imag) < min_im:
        raise ValueError(f"need |Im z| >= {min_im} for a stable study")
    table = []
    for n_index, n_value in enumerate(n_list):
        levels = model.sample_levels(n_value, mode="quantile")
        args = [(sys, levels, z, n_value, seed, n_index, rep)
                for rep in range(m)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                gs = list(pool.map(_study_realization, args))
        else:
            gs = [_study_realization(a) for a in args]
        gs = np.array(gs)
        mean = gs.mean(axis=0)
        var = gs.var(axis=0)  # complex variance E|g|^2 - |Eg|^2
        table.append({"N": int(n_value), "variance": var.real, "mean": mean})
    log_n = np.log([row["N"] for row in table])
    log_v = np.log([max(row["variance"].max(), 1e-300) for row in table])
    slope = float(np.polyfit(log_n, log_v, 1)[0]) if len(table) > 1 else float("nan")
    return table, slope
