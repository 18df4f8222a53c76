"""Matrix-valued self-consistent equation for the dressed system resolvent.

Solves f(z) = integral of (E + H_S - z - Sigma f(z) Sigma)^{-1} nu(E) dE in
the class of matrix Herglotz functions, both off the real axis and, for
convolution reservoirs, directly on it through the one-sided Fourier
representation f(E) = i * int_0^inf e^{it(E - Htilde)} phi(t)^J dt with
Htilde = H_S - Sigma f Sigma.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .ensemble import SystemSpec
from .numerics import (
    NonIntegrableEnvelopeError,
    adaptive_panel_integral,
    choose_truncation,
)
from .reservoir import DomainError, ReservoirModel, default_hy_j0

__all__ = [
    "DeltaMixture",
    "TabulatedNu",
    "HerglotzMatrix",
    "SpectralDensity",
    "HerglotzReport",
    "FixedPointError",
    "solve_halfplane",
    "solve_real_axis",
    "gamma_density",
    "stieltjes_invert_window",
    "invert_window_from_solver",
    "herglotz_verify",
]


class FixedPointError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class DeltaMixture:
    """Purely atomic reservoir density: test fixture for closed-form cases."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.points) != len(self.weights) or not self.points:
            raise ValueError("points and weights must be equal-length, nonempty")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class TabulatedNu:
    """Reservoir density given directly as a table (non-convolution path)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or np.any(np.diff(g) <= 0):
            raise ValueError("need strictly increasing grid matching values")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, e):
        return np.interp(e, self.grid, self.values, left=0.0, right=0.0)


@dataclass
class HerglotzMatrix:
    z: complex
    value: np.ndarray
    info: dict = field(default_factory=dict)

    def imag_part(self) -> np.ndarray:
        m = (self.value - self.value.conj().T) / 2j
        return 0.5 * (m + m.conj().T)


@dataclass
class SpectralDensity:
    grid: np.ndarray
    values: np.ndarray  # shape (len(grid), n, n), Hermitian PSD
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HerglotzReport:
    min_imag_eig: float
    max_norm_imz: float
    passed: bool


# ----------------------------------------------------------------------
# nu plumbing
# ----------------------------------------------------------------------

@functools.lru_cache(maxsize=8)
def _dos_spline(model: ReservoirModel, npts: int = 4097):
    lo, hi = model.mass_window(tail=1e-15)
    grid = np.linspace(lo, hi, npts)
    dens = model.dos(grid, tol=1e-11)
    return CubicSpline(grid, dens, extrapolate=False), lo, hi


def _nu_window_and_eval(nu, tol: float):
    """(evaluate, window, is_atomic_sum) for the supported nu inputs."""
    if isinstance(nu, DeltaMixture):
        return None, None, True
    if isinstance(nu, ReservoirModel):
        if nu.family == "gaussian":
            lo, hi = nu.mass_window(tail=1e-15)
            return nu._dos_gaussian, (lo, hi), False
        spline, lo, hi = _dos_spline(nu)
        def ev(e):
            out = spline(e)
            return np.nan_to_num(out, nan=0.0, copy=False)
        return ev, (lo, hi), False
    if isinstance(nu, TabulatedNu):
        return nu, (float(nu.grid[0]), float(nu.grid[-1])), False
    raise TypeError(f"unsupported nu input: {type(nu).__name__}")


# ----------------------------------------------------------------------
# the fixed-point map Phi
# ----------------------------------------------------------------------

def _eig_factor(a: np.ndarray):
    """Diagonalization a = V diag(d) V^{-1} with a conditioning guard."""
    d, v = np.linalg.eig(a)
    try:
        v_inv = np.linalg.inv(v)
    except np.linalg.LinAlgError:
        return None
    recon = (v * d) @ v_inv
    if np.abs(recon - a).max() > 1e-9 * (np.abs(a).max() + 1.0):
        return None
    return d, v, v_inv


def _make_phi_halfplane(sys: SystemSpec, nu, z: complex, tol: float):
    """Phi(f) = integral nu(E) (E + H_S - z - Sigma f Sigma)^{-1} dE."""
    n = sys.n
    eye = np.eye(n)
    sig = sys.sigma_s

    if isinstance(nu, DeltaMixture):
        pts = np.asarray(nu.points, dtype=float)
        wts = np.asarray(nu.weights, dtype=float)

        def phi(f):
            a = sys.h_s - z * eye - sig @ f @ sig
            out = np.zeros((n, n), dtype=complex)
            for e_k, p_k in zip(pts, wts):
                out += p_k * np.linalg.inv(e_k * eye + a)
            return out

        return phi

    ev, (lo, hi), _ = _nu_window_and_eval(nu, tol)
    qtol = 0.05 * tol

    def phi(f):
        a = sys.h_s - z * eye - sig @ f @ sig
        fac = _eig_factor(a)
        if fac is not None:
            d, v, v_inv = fac
            poles = -d  # Im(-d) >= |Im z| in exact arithmetic
            edges = _pole_edges(poles, lo, hi)

            def scalar_integrand(e):
                return ev(e)[:, None] / (e[:, None] + d[None, :])

            s, _ = adaptive_panel_integral(scalar_integrand, lo, hi, tol=qtol,
                                           initial_edges=edges)
            return (v * s) @ v_inv

        def matrix_integrand(e):
            block = e[:, None, None] * eye[None, :, :] + a[None, :, :]
            return ev(e)[:, None, None] * np.linalg.inv(block)

        s, _ = adaptive_panel_integral(matrix_integrand, lo, hi, tol=qtol,
                                       initial_panels=64)
        return s

    return phi


def _pole_edges(poles: np.ndarray, lo: float, hi: float) -> np.ndarray:
    edges = [np.linspace(lo, hi, 17)]
    for p in poles:
        re, im = float(p.real), abs(float(p.imag))
        im = max(im, 1e-8)
        offs = np.array([-30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0])
        edges.append(re + offs * im)
    return np.concatenate(edges)


# ----------------------------------------------------------------------
# damped fixed-point iteration
# ----------------------------------------------------------------------

def _iterate(phi, f0: np.ndarray, tol: float, max_iter: int, damping: float):
    f = f0
    omega = damping
    res_prev = np.inf
    for it in range(max_iter):
        target = phi(f)
        res = float(np.linalg.norm(target - f, 2))
        if res <= tol:
            return f, {"iterations": it, "residual": res}
        if res > res_prev * (1.0 + 1e-12):
            omega = max(0.5 * omega, 0.02)
        f = f + omega * (target - f)
        res_prev = res
    raise FixedPointError(
        f"no convergence after {max_iter} iterations (residual {res:.3e})",
        residual=res)


def _check_herglotz(f: np.ndarray, z: complex, tol: float):
    sign = 1.0 if z.imag > 0 else -1.0
    imag = sign * (f - f.conj().T) / 2j
    min_eig = float(np.linalg.eigvalsh(imag).min())
    if min_eig < -50.0 * tol:
        raise FixedPointError(
            f"solution violates matrix Herglotz positivity ({min_eig:.3e})")
    norm = float(np.linalg.norm(f, 2))
    if norm * abs(z.imag) > 1.0 + 1e-6:
        raise FixedPointError(
            f"solution violates the resolvent norm bound (|f| Im z = "
            f"{norm * abs(z.imag):.6f})")


def solve_halfplane(sys: SystemSpec, nu, z: complex, tol: float = 1e-10,
                    max_iter: int = 2000, damping: float = 0.5,
                    f0: np.ndarray | None = None) -> HerglotzMatrix:
    """Solve the self-consistent equation at non-real z.

    Cold starts are used inside the uniqueness region |Im z| > ||Sigma||^2;
    closer to the axis the solution is continued down a geometric ladder in
    Im z, reusing each rung as the next initial guess.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("z must be non-real; use solve_real_axis for E real")
    sig_norm2 = float(np.linalg.norm(sys.sigma_s, 2)) ** 2
    threshold = max(1.0, 2.0 * sig_norm2)
    sign = 1.0 if z.imag > 0 else -1.0
    target_im = abs(z.imag)

    total_iters = 0
    if not np.any(sys.sigma_s):
        # decoupled: the map does not depend on f, evaluate it once
        phi = _make_phi_halfplane(sys, nu, z, tol)
        f = phi(np.zeros((sys.n, sys.n), dtype=complex))
        info = {"iterations": 1,
                "residual": float(np.linalg.norm(phi(f) - f, 2))}
        total_iters = 1
    elif f0 is not None:
        f = np.asarray(f0, dtype=complex)
        phi = _make_phi_halfplane(sys, nu, z, tol)
        f, info = _iterate(phi, f, tol, max_iter, damping)
        total_iters = info["iterations"]
    else:
        ims = [max(target_im, threshold)]
        while ims[-1] > target_im * 1.0000001:
            ims.append(max(0.5 * ims[-1], target_im))
        f = np.zeros((sys.n, sys.n), dtype=complex)
        for im in ims:
            zz = complex(z.real, sign * im)
            phi = _make_phi_halfplane(sys, nu, zz, tol)
            f, info = _iterate(phi, f, tol, max_iter, damping)
            total_iters += info["iterations"]
    _check_herglotz(f, z, tol)
    return HerglotzMatrix(z=z, value=f,
                          info={"iterations": total_iters,
                                "residual": info["residual"]})


# ----------------------------------------------------------------------
# real-axis boundary values
# ----------------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def _fourier_setup(model: ReservoirModel, tol: float, t_cap: float = 2.0e4):
    j = model.J
    envelope = lambda t: model.char_fn_envelope(t) ** j
    t_trunc, tail = choose_truncation(envelope, 0.01 * tol)
    if t_trunc > t_cap:
        raise NonIntegrableEnvelopeError(
            f"Fourier truncation T = {t_trunc:.3e} exceeds cap {t_cap:.3e}")
    return t_trunc, tail


def solve_real_axis(sys: SystemSpec, model: ReservoirModel, e: float,
                    tol: float = 1e-10, route: str = "auto",
                    f0: np.ndarray | None = None,
                    deltas=(0.02, 0.01, 0.005),
                    max_iter: int = 2000, damping: float = 0.5) -> HerglotzMatrix:
    """Boundary value f(E) = lim f(E + i 0+) for a convolution reservoir.

    route="fourier" iterates the one-sided Fourier representation (preferred
    whenever the envelope |phi|^J truncates at a manageable T);
    route="extrapolation" solves at E + i delta for a ladder of deltas and
    extrapolates to the axis.
    """
    j0 = default_hy_j0(model)
    if model.J < j0:
        raise DomainError(
            f"J = {model.J} is below the Hausdorff-Young threshold J0 = {j0:.6g}")

    if route == "auto":
        try:
            setup = _fourier_setup(model, tol)
            route = "fourier"
        except NonIntegrableEnvelopeError:
            route = "extrapolation"
    elif route == "fourier":
        setup = _fourier_setup(model, tol)
    elif route != "extrapolation":
        raise ValueError(f"unknown route {route!r}")

    if route == "extrapolation":
        return _solve_by_extrapolation(sys, model, e, tol, deltas, max_iter,
                                       damping)

    t_trunc, tail = setup
    n = sys.n
    eye = np.eye(n)
    sig = sys.sigma_s
    jj = model.J
    lo, hi = model.mass_window(tail=1e-15)
    center = jj * model.block_mean()
    osc = abs(e - center) + max(hi - center, center - lo)
    n0 = min(max(8, int(t_trunc * osc / 8.0) + 1), 60_000)
    qtol = 0.05 * tol
    decoupled = not np.any(sig)

    def phi_map(f):
        a = sys.h_s - sig @ f @ sig  # Htilde
        fac = _eig_factor(a)
        if fac is not None:
            d, v, v_inv = fac

            def scalar_integrand(t):
                ph = np.asarray(model.char_fn(t)) ** jj
                return np.exp(1j * t[:, None] * (e - d)[None, :]) * ph[:, None]

            s, _ = adaptive_panel_integral(scalar_integrand, 0.0, t_trunc,
                                           tol=qtol, initial_panels=n0)
            return 1j * ((v * s) @ v_inv)

        def matrix_integrand(t):
            ph = np.asarray(model.char_fn(t)) ** jj
            out = np.empty((len(t), n, n), dtype=complex)
            from .numerics import matrix_exp
            for k, tk in enumerate(t):
                out[k] = matrix_exp(1j * tk * (e * eye - a)) * ph[k]
            return out

        s, _ = adaptive_panel_integral(matrix_integrand, 0.0, t_trunc,
                                       tol=qtol, initial_panels=n0)
        return 1j * s

    if decoupled:
        # Sigma = 0 makes the map constant; the fixed point is explicit
        f = phi_map(np.zeros((n, n), dtype=complex))
        info = {"iterations": 1,
                "residual": float(np.linalg.norm(phi_map(f) - f, 2))}
    else:
        f_init = np.zeros((n, n), dtype=complex) if f0 is None else np.asarray(f0, complex)
        f, info = _iterate(phi_map, f_init, tol, max_iter, damping)
    imag_min = float(np.linalg.eigvalsh((f - f.conj().T) / 2j).min())
    if imag_min < -tol * 50.0:
        raise FixedPointError(
            f"boundary value lost positivity (min imag eig {imag_min:.3e})")
    info.update({"route": "fourier", "t_trunc": t_trunc, "tail": tail})
    return HerglotzMatrix(z=complex(e), value=f, info=info)


def _lagrange_weights_at_zero(xs: np.ndarray) -> np.ndarray:
    w = np.ones(len(xs))
    for i in range(len(xs)):
        for k in range(len(xs)):
            if k != i:
                w[i] *= (0.0 - xs[k]) / (xs[i] - xs[k])
    return w


def _solve_by_extrapolation(sys, model, e, tol, deltas, max_iter, damping):
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    values = []
    f_prev = None
    total = 0
    for dl in deltas:
        sol = solve_halfplane(sys, model, complex(e, dl), tol=tol,
                              max_iter=max_iter, damping=damping,
                              f0=f_prev)
        f_prev = sol.value
        values.append(sol.value)
        total += sol.info["iterations"]
    w = _lagrange_weights_at_zero(deltas)
    f = sum(wk * vk for wk, vk in zip(w, values))
    # error indicator: difference against the lower-order extrapolation
    w_lin = _lagrange_weights_at_zero(deltas[-2:])
    f_lin = sum(wk * vk for wk, vk in zip(w_lin, values[-2:]))
    est = float(np.abs(f - f_lin).max())
    info = {"route": "extrapolation", "iterations": total,
            "residual": est, "deltas": list(map(float, deltas))}
    return HerglotzMatrix(z=complex(e), value=f, info=info)


# ----------------------------------------------------------------------
# spectral density and window inversion
# ----------------------------------------------------------------------

def gamma_density(sys: SystemSpec, model: ReservoirModel, e_grid,
                  tol: float = 1e-10, chained: bool = True,
                  route: str = "auto") -> SpectralDensity:
    """Matrix spectral density gamma(E) = Im f(E) / pi on a grid."""
    e_grid = np.asarray(e_grid, dtype=float)
    values = np.empty((len(e_grid), sys.n, sys.n), dtype=complex)
    residuals = []
    iterations = []
    f_prev = None
    for i, e in enumerate(e_grid):
        try:
            sol = solve_real_axis(sys, model, float(e), tol=tol, route=route,
                                  f0=f_prev if chained else None)
        except (FixedPointError, NonIntegrableEnvelopeError) as exc:
            raise FixedPointError(
                f"gamma solve failed at grid point E = {e:g}: {exc}") from exc
        f_prev = sol.value if chained else None
        m = sol.imag_part() / np.pi
        min_eig = float(np.linalg.eigvalsh(m).min())
        if min_eig < -tol * 50.0:
            raise FixedPointError(
                f"negative spectral density at E = {e:g} ({min_eig:.3e})")
        values[i] = m
        residuals.append(sol.info.get("residual", np.nan))
        iterations.append(sol.info.get("iterations", -1))
    return SpectralDensity(grid=e_grid, values=values,
                           info={"residuals": residuals,
                                 "iterations": iterations, "tol": tol})


def stieltjes_invert_window(lambda_grid, f_stack, deltas, win):
    """e_S(window) from f sampled on a lambda grid at several Im z levels.

    ``f_stack[k, i]`` must hold f(lambda_i + i delta_k).  The lambda integral
    uses the trapezoid rule on the given grid; the delta -> 0 limit is taken
    by polynomial extrapolation through the provided levels.  Returns
    (matrix, straddles_edge_flag).
    """
    lam = np.asarray(lambda_grid, dtype=float)
    stack = np.asarray(f_stack, dtype=complex)
    deltas = np.asarray(deltas, dtype=float)
    if stack.shape[0] != len(deltas) or stack.shape[1] != len(lam):
        raise ValueError("f_stack shape must be (len(deltas), len(lambda), n, n)")
    if lam[0] > win.lo + 1e-12 or lam[-1] < win.hi - 1e-12:
        raise ValueError("lambda grid does not cover the window")
    imag = (stack - np.transpose(stack.conj(), (0, 1, 3, 2))) / 2j
    per_delta = np.trapezoid(imag, lam, axis=1) / np.pi
    w = _lagrange_weights_at_zero(deltas)
    out = np.tensordot(w, per_delta, axes=(0, 0))
    out = 0.5 * (out + out.conj().T)

    k_min = int(np.argmin(deltas))
    dens = np.einsum("iaa->i", imag[k_min]).real / np.pi
    peak = dens.max()
    edge = bool(peak > 1e-8 and min(dens[0], dens[-1]) < 0.02 * peak)
    return out, edge


def invert_window_from_solver(sys: SystemSpec, nu, win,
                              deltas=(0.02, 0.01, 0.005), npts: int = 33,
                              tol: float = 1e-10):
    """Convenience wrapper building the f stack with chained half-plane solves."""
    lam = np.linspace(win.lo, win.hi, npts)
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    stack = np.empty((len(deltas), npts, sys.n, sys.n), dtype=complex)
    for k, dl in enumerate(deltas):
        f_prev = None
        for i, lam_i in enumerate(lam):
            sol = solve_halfplane(sys, nu, complex(lam_i, dl), tol=tol,
                                  f0=f_prev)
            f_prev = sol.value
            stack[k, i] = sol.value
    return stieltjes_invert_window(lam, stack, deltas, win)


def herglotz_verify(samples) -> HerglotzReport:
    """Check matrix Herglotz positivity and the norm bound over a z grid.

    ``samples`` is an iterable of HerglotzMatrix or (z, value) pairs with
    Im z > 0.
    """
    min_eig = np.inf
    max_prod = 0.0
    for item in samples:
        if isinstance(item, HerglotzMatrix):
            z, val = item.z, item.value
        else:
            z, val = item
        z = complex(z)
        if z.imag <= 0:
            raise ValueError("herglotz_verify expects Im z > 0")
        val = np.atleast_2d(np.asarray(val, dtype=complex))
        imag = (val - val.conj().T) / 2j
        min_eig = min(min_eig, float(np.linalg.eigvalsh(imag).min()))
        max_prod = max(max_prod, float(np.linalg.norm(val, 2)) * z.imag)
    passed = (min_eig >= -1e-12) and (max_prod <= 1.0 + 1e-9)
    return HerglotzReport(min_imag_eig=float(min_eig),
                          max_norm_imz=float(max_prod), passed=passed)
