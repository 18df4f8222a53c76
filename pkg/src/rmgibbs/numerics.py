"""Dense linear-algebra and quadrature kernel shared by all other modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "EigenDecomposition",
    "QuadratureError",
    "NonIntegrableEnvelopeError",
    "hermitian_eig",
    "matrix_exp",
    "adaptive_panel_integral",
    "choose_truncation",
    "integrate_decaying",
]

# 15-point Gauss-Legendre rule on [-1, 1]; a panel is accepted when its
# one-shot value agrees with the sum over its two halves.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NonIntegrableEnvelopeError(QuadratureError):
    """Tail mass of the decay envelope does not converge."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition A = vectors @ diag(values) @ vectors^H."""

    values: np.ndarray  # real, ascending
    vectors: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def _as_square(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def hermitian_eig(a, rtol: float = 1e-12) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Rejects inputs whose anti-Hermitian part exceeds ``rtol`` relative to the
    matrix scale, so silent symmetrization never hides a modelling bug.
    """
    a = _as_square(a, "A")
    scale = max(np.abs(a).max(), 1.0)
    dev = np.abs(a - a.conj().T).max()
    if dev > rtol * scale:
        raise ValueError(f"matrix is not Hermitian: max |A - A^H| = {dev:.3e}")
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigensolver did not converge: {exc}") from exc
    return EigenDecomposition(values=values, vectors=vectors)


def matrix_exp(m) -> np.ndarray:
    """Matrix exponential e^M via Pade approximation with scaling and squaring.

    Works for non-normal (even defective) M, which rules out plain
    eigendecomposition.  Overflow is reported, never returned as NaN/inf.
    """
    m = _as_square(m, "M")
    out = sla.expm(m)
    if not np.all(np.isfinite(out)):
        raise OverflowError(
            f"matrix exponential overflowed (||M|| = {np.linalg.norm(m, 2):.3e})"
        )
    return out


def _panel_values(f, segs: np.ndarray) -> np.ndarray:
    """Gauss-Legendre estimate on each [a, b] row of segs.

    f must accept a 1-d array of points and return an array whose leading axis
    matches it; trailing axes (vector/matrix values) are carried through.
    """
    half = 0.5 * (segs[:, 1] - segs[:, 0])
    mid = 0.5 * (segs[:, 1] + segs[:, 0])
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(pts.ravel()))
    vals = vals.reshape(pts.shape + vals.shape[1:])
    weighted = np.tensordot(vals, _GL_W, axes=([1], [0]))
    extra = (1,) * (weighted.ndim - 1)
    return weighted * half.reshape((-1,) + extra)


def adaptive_panel_integral(f, a: float, b: float, tol: float,
                            initial_panels: int = 8, max_rounds: int = 60,
                            max_panels: int = 200_000,
                            initial_edges=None):
    """Integrate f over [a, b] by adaptive bisection of Gauss-Legendre panels.

    The integrand may be scalar-, vector- or matrix-valued.  Per-panel error
    is estimated against the two-half refinement and the tolerance is
    distributed proportionally to panel width.  ``initial_edges`` seeds the
    panel layout (useful near known near-singularities).  Returns (value,
    error estimate).
    """
    if not b > a:
        raise ValueError("need b > a")
    if initial_edges is not None:
        inner = np.asarray(initial_edges, dtype=float)
        inner = inner[(inner > a) & (inner < b)]
        edges = np.unique(np.concatenate([[a, b], inner]))
    else:
        edges = np.linspace(a, b, max(initial_panels, 1) + 1)
    segs = np.stack([edges[:-1], edges[1:]], axis=1)
    coarse = _panel_values(f, segs)

    total = np.zeros_like(coarse[0])
    err_total = 0.0
    length = b - a
    for _ in range(max_rounds):
        mids = 0.5 * (segs[:, 0] + segs[:, 1])
        left = np.stack([segs[:, 0], mids], axis=1)
        right = np.stack([mids, segs[:, 1]], axis=1)
        fine_l = _panel_values(f, left)
        fine_r = _panel_values(f, right)
        refined = fine_l + fine_r
        err = np.abs(refined - coarse)
        while err.ndim > 1:
            err = err.max(axis=-1)
        alloc = np.maximum(tol * (segs[:, 1] - segs[:, 0]) / length, 1e-18)
        ok = err <= alloc
        total = total + refined[ok].sum(axis=0)
        err_total += float(err[ok].sum())
        if ok.all():
            return total, err_total
        keep = ~ok
        segs = np.concatenate([left[keep], right[keep]], axis=0)
        coarse = np.concatenate([fine_l[keep], fine_r[keep]], axis=0)
        if len(segs) > max_panels:
            raise QuadratureError(
                f"panel budget exceeded ({len(segs)} active panels); "
                f"residual error {float(err[keep].sum()):.3e} > tol {tol:.3e}"
            )
    raise QuadratureError("adaptive quadrature did not converge")


def choose_truncation(envelope, tol: float, t_start: float = 1.0,
                      max_doublings: int = 60) -> tuple[float, float]:
    """Pick T so that the envelope tail mass beyond T is below tol.

    The envelope must be nonnegative, eventually decreasing and integrable;
    integrability is established numerically by requiring panel masses over
    successive [T, 2T] octaves to decay geometrically.  Returns
    (T, tail_bound).
    """
    t = float(t_start)
    prev = None
    for _ in range(max_doublings):
        mass, _ = adaptive_panel_integral(
            envelope, t, 2 * t, tol=max(tol * 0.1, 1e-16), initial_panels=4)
        mass = float(np.real(mass))
        if mass == 0.0:
            return 2 * t, 0.0
        if prev is not None and prev > 0.0:
            ratio = mass / prev
            if ratio < 0.9:
                tail_bound = mass * ratio / (1.0 - ratio)
                if tail_bound < tol:
                    return 2 * t, tail_bound
        prev = mass
        t *= 2
    raise NonIntegrableEnvelopeError(
        f"envelope tail mass did not fall below {tol:.3e} by t = {t:.3e}"
    )


def integrate_decaying(f, envelope, tol: float = 1e-10,
                       t_cap: float | None = None,
                       osc_scale: float | None = None):
    """Integrate f over [0, oo) given a monotone integrable decay envelope.

    The truncation point T is chosen where the envelope tail mass drops below
    tol; [0, T] is then covered by adaptive panels.  ``osc_scale`` hints at the
    fastest oscillation frequency of f so that initial panels resolve it.
    Returns (value, error_estimate) with the tail bound folded in.
    """
    t_trunc, tail = choose_truncation(envelope, tol)
    if t_cap is not None and t_trunc > t_cap:
        raise NonIntegrableEnvelopeError(
            f"required truncation T = {t_trunc:.3e} exceeds cap {t_cap:.3e}"
        )
    n0 = 8
    if osc_scale is not None and osc_scale > 0:
        n0 = max(n0, int(t_trunc * osc_scale / 2.0) + 1)
    n0 = min(n0, 60_000)
    value, err = adaptive_panel_integral(f, 0.0, t_trunc, tol=tol,
                                         initial_panels=n0)
    return value, err + tail
