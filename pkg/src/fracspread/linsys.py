"""Linearized cooperative system in Fourier variables.

For a frequency (or complex) variable z the linear system reads
    v' = (A(z) + B) v,   A(z) = diag(-z^(2 alpha_i)),   B = l * ones(m, m),
and its solution operator e^{t(A+B)} splits as e^{tB} e^{tA} - I_t(z) where

    I_t(z) = int_0^t e^{(t-s)(A+B)} [e^{sB}, A] e^{sA} ds.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from fracspread.errors import DomainError, NumericalError, ValidationError
from fracspread.spectral import centered_kernel, irfft, rfft


@dataclass(frozen=True)
class LinearizedSystem:
    alpha: tuple
    l: float

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.alpha))
        if not a or any(not (0 < v <= 1) for v in a):
            raise ValidationError("exponents must lie in (0, 1]")
        if self.l < 0:
            raise ValidationError("coupling constant l must be nonnegative")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "l", float(self.l))

    @classmethod
    def from_model(cls, model, bounds=None):
        from fracspread.eigen import coupling_bounds

        if bounds is None:
            bounds = coupling_bounds(model)
        return cls(alpha=model.alpha, l=bounds.l)

    @property
    def m(self):
        return len(self.alpha)

    @property
    def alpha1(self):
        return max(self.alpha)

    @property
    def alpha_min(self):
        return min(self.alpha)

    @property
    def B(self):
        return np.full((self.m, self.m), self.l)

    def A(self, z):
        """diag(-z^(2 alpha_i)); z may be an array, giving shape (..., m, m)."""
        z = np.asarray(z)
        pw = np.power.outer(z.astype(complex) if np.iscomplexobj(z) else z.astype(float), 2.0 * np.array(self.alpha))
        out = np.zeros(z.shape + (self.m, self.m), dtype=pw.dtype)
        idx = np.arange(self.m)
        out[..., idx, idx] = -pw
        return out


def matrix_exponential(M, t=1.0):
    """exp(t M) for a matrix or a stack of matrices (last two axes).

    Uses scaling and squaring with a Pade approximant (scipy's ``expm``).
    """
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = expm(M * t)
        except FloatingPointError as exc:
            raise NumericalError(f"matrix exponential overflowed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix exponential overflowed")
    return out


def _check_sector(sys, z):
    z = complex(z)
    if z == 0:
        return 0.0
    theta = math.atan2(z.imag, z.real)
    limit = math.pi / (4.0 * sys.alpha1)
    if not (0.0 <= theta < limit):
        raise DomainError(f"arg(z) = {theta:.6g} outside the sector [0, {limit:.6g})")
    return theta


def _graded_panels(t, width, cap):
    """Panel edges on [0, t], geometrically refined towards both ends, with
    no panel wider than ``cap``."""
    if width >= t / 2 and cap >= t / 2:
        return np.array([0.0, t / 2, t])
    left = [0.0]
    w = width
    while left[-1] + w < t / 2:
        left.append(left[-1] + w)
        w = min(2 * w, cap)
    left.append(t / 2)
    left = np.array(left)
    return np.concatenate([left, (t - left[-2::-1])])


def commutator_integral(sys, z, t, n_quad=16):
    """I_t(z) by composite Gauss-Legendre quadrature.

    Panels are graded with smallest width 1/max|z^(2 alpha_i)| at both
    ends, where e^{sA} and e^{(t-s)(A+B)} vary fastest, and are never wider
    than 2/max|z^(2 alpha_i)| so oscillation near the sector edge stays
    resolved.
    """
    _check_sector(sys, z)
    if t < 0:
        raise DomainError("t must be nonnegative")
    m = sys.m
    if t == 0 or m == 1 or z == 0:
        return np.zeros((m, m), dtype=complex)
    z = complex(z)
    A = sys.A(z)
    B = sys.B
    rate = max(abs(z) ** (2 * a) for a in sys.alpha)
    edges = _graded_panels(t, 1.0 / max(rate, 1.0 / t), 2.0 / rate)
    xg, wg = np.polynomial.legendre.leggauss(int(n_quad))
    lo, hi = edges[:-1, None], edges[1:, None]
    s = (0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * wg).ravel()
    E_ab = matrix_exponential((A + B)[None] * (t - s)[:, None, None])
    E_b = matrix_exponential(B[None] * s[:, None, None])
    diagA = np.diag(A)
    E_a = np.exp(s[:, None] * diagA[None, :])  # diagonal of e^{sA}
    comm = E_b @ A - A @ E_b
    integrand = E_ab @ comm * E_a[:, None, :]
    return np.tensordot(w, integrand, axes=(0, 0))


def duhamel_identity_residual(sys, z, t, n_quad=16):
    """2-norm of e^{t(A+B)} - e^{tB} e^{tA} + I_t, relative to the size of
    the terms (floored at 1).

    The operators grow like e^{m l t}, so an absolute residual would only
    measure the size of the floating-point ulp at that scale.
    """
    _check_sector(sys, z)
    z = complex(z)
    A = sys.A(z)
    B = sys.B
    lhs = matrix_exponential(A + B, t)
    split = matrix_exponential(B, t) @ np.diag(np.exp(t * np.diag(A)))
    I = commutator_integral(sys, z, t, n_quad)
    scale = max(1.0, float(np.linalg.norm(lhs, 2)), float(np.linalg.norm(split, 2)))
    return float(np.linalg.norm(lhs - split + I, 2)) / scale


def sector_lattice(sys, radii=(0.0, 0.5, 1.0, 2.0, 4.0, 8.0), fractions=(0.0, 0.25, 0.5, 0.75, 0.95)):
    """Deterministic z samples r e^{i theta}, theta = f * pi / (4 alpha_1)."""
    limit = math.pi / (4.0 * sys.alpha1)
    out = []
    for r in radii:
        for f in fractions:
            out.append(complex(r * math.cos(f * limit), r * math.sin(f * limit)))
            if r == 0:
                break
    return out


@dataclass
class SectorReport:
    rows: list = field(default_factory=list)  # (z, t, lhs, rhs, slack)
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    @property
    def min_slack(self):
        return min(r[4] for r in self.rows) if self.rows else float("nan")


def sector_bound(sys, z, t):
    z = complex(z)
    theta = _check_sector(sys, z)
    nB = float(np.linalg.norm(sys.B, 2))
    c = math.cos(2 * sys.alpha1 * theta)
    r = abs(z)
    return math.exp((nB - r ** (2 * sys.alpha1) * c) * t) + math.exp((nB - r ** (2 * sys.alpha_min) * c) * t)


def sector_norm_check(sys, z_samples=None, t_samples=(0.5, 1.0, 2.0)):
    """Check ||e^{(A(z)+B)t}||_2 against the two-exponential sector bound."""
    if z_samples is None:
        z_samples = sector_lattice(sys)
    for z in z_samples:
        _check_sector(sys, z)  # reject before computing anything
    report = SectorReport()
    for z in z_samples:
        A = sys.A(complex(z))
        for t in t_samples:
            lhs = float(np.linalg.norm(matrix_exponential(A + sys.B, t), 2))
            rhs = sector_bound(sys, z, t)
            slack = rhs - lhs
            report.rows.append((complex(z), float(t), lhs, rhs, slack))
            if slack < 0:
                report.violations.append((complex(z), float(t)))
    return report


def commutator_constant(sys, t, z_samples):
    """Smallest C with ||I_t(z)|| <= C (|z|^2a e^{-|z|^2a c t} + |z|^2a1 e^{-|z|^2a1 c t})
    over the samples, c = cos(2 alpha_1 arg z)."""
    best = 0.0
    for z in z_samples:
        z = complex(z)
        if z == 0:
            continue
        theta = _check_sector(sys, z)
        c = math.cos(2 * sys.alpha1 * theta)
        r = abs(z)
        ra, r1 = r ** (2 * sys.alpha_min), r ** (2 * sys.alpha1)
        denom = ra * math.exp(-ra * c * t) + r1 * math.exp(-r1 * c * t)
        best = max(best, float(np.linalg.norm(commutator_integral(sys, z, t), 2)) / denom)
    return best


# -- real-space kernels ----------------------------------------------------------


def _symbol_stack(sys, t, grid):
    xi = grid.rfreq
    M = sys.A(xi) + sys.B[None]
    return matrix_exponential(M, t)  # (nf, m, m)


def linear_matrix_kernel(sys, t, grid):
    """Kernel of e^{t(A(|D|)+B)} as an (m, m, n) array centred at x = 0."""
    if not t > 0:
        raise DomainError("t must be positive")
    S = _symbol_stack(sys, t, grid)
    return centered_kernel(np.moveaxis(S, 0, -1), grid)


def linear_upper_field(sys, u0, t, grid=None):
    """The linear evolution e^{t(A(|D|)+B)} u0, which dominates the solution."""
    from fracspread.evolve import FieldState

    grid = u0.grid if grid is None else grid
    if np.any(u0.u < 0):
        raise DomainError("initial state must be nonnegative")
    if t == 0:
        return FieldState(u0.t, u0.u.copy(), grid)
    S = _symbol_stack(sys, t, grid)
    uh = rfft(u0.u)  # (m, nf)
    vh = np.einsum("kij,jk->ik", S, uh)
    return FieldState(u0.t + t, irfft(vh, grid.n), grid)
