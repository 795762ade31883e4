"""Periodic grid, fractional Laplacian multipliers and heat kernels (d = 1).

The real line is modelled by the torus [-L/2, L/2).  The core region
|x| <= L/8 is where every measurement is taken; |x| >= 3L/8 is a guard band
that must stay (numerically) empty during simulations.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy import integrate, special
from scipy.interpolate import BarycentricInterpolator, CubicSpline

from fracspread.errors import CertificateError, DomainError, ValidationError

_FFT_WORKERS = 1


def set_fft_workers(n):
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def rfft(a):
    return sfft.rfft(a, axis=-1, workers=_FFT_WORKERS)


def irfft(a, n):
    return sfft.irfft(a, n=n, axis=-1, workers=_FFT_WORKERS)


@dataclass(frozen=True)
class Grid:
    n: int
    length: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValidationError(f"grid size must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValidationError("domain length must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @property
    def freq(self):
        """Signed angular frequencies in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def rfreq(self):
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)

    @property
    def center(self):
        return self.n // 2

    def core_mask(self):
        return np.abs(self.x) <= self.length / 8

    def guard_mask(self):
        return np.abs(self.x) >= 3 * self.length / 8

    def refined(self, factor=2):
        return Grid(self.n * factor, self.length)


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"exponent must lie in (0, 1], got {alpha}")


def frac_laplacian(field, alpha, grid):
    """Apply the multiplier |xi|^(2 alpha) along the last axis."""
    _check_alpha(alpha)
    field = np.asarray(field, dtype=float)
    symbol = np.abs(grid.freq) ** (2.0 * alpha)
    out = sfft.ifft(symbol * sfft.fft(field, axis=-1, workers=_FFT_WORKERS), axis=-1, workers=_FFT_WORKERS)
    scale = max(1.0, float(np.max(np.abs(out.real)))) if out.size else 1.0
    assert np.max(np.abs(out.imag), initial=0.0) < 1e-10 * scale, "imaginary residue in real transform"
    return out.real


@lru_cache(maxsize=8)
def _diffusion_symbol(alpha, t, n, length):
    grid = Grid(n, length)
    xi = grid.rfreq
    base = np.exp(-t * xi ** (2.0 * alpha))
    if alpha <= 0.5:
        return base
    # Sum the aliased copies: this is the transform of the sampled kernel,
    # which is nonnegative.  Normalizing at xi = 0 keeps mass exactly.
    K = 2.0 * np.pi / grid.dx
    total = base.copy()
    zero = 1.0
    mm = 1
    while True:
        head = math.exp(-t * (mm * K) ** (2.0 * alpha))
        if head < 1e-18:
            break
        total += np.exp(-t * np.abs(xi + mm * K) ** (2.0 * alpha))
        total += np.exp(-t * np.abs(xi - mm * K) ** (2.0 * alpha))
        zero += 2.0 * head
        mm += 1
    total /= zero
    total.setflags(write=False)
    return total


def diffusion_symbol(alpha, t, grid):
    """rfft-layout propagator for exp(-t (-Delta)^alpha) on ``grid``.

    For alpha <= 1/2 this is exactly exp(-t |xi|^(2 alpha)).  For larger
    alpha the truncated multiplier has negative lobes when the kernel is
    narrower than a few cells; there the aliased (sampled-kernel) symbol is
    used instead.  Both agree to within exp(-t (2 pi/dx)^(2 alpha)).
    """
    _check_alpha(alpha)
    if t < 0:
        raise DomainError("time must be nonnegative")
    return _diffusion_symbol(float(alpha), float(t), grid.n, grid.length)


def apply_symbol(field, symbol, n):
    return irfft(rfft(field) * symbol, n)


# -- whole-line correction for slowly decaying profiles ----------------------


def frac_laplacian_constant(alpha):
    """Normalizing constant of the singular-integral form in d = 1."""
    if alpha == 1.0:
        return float("nan")
    return 4.0**alpha * math.gamma(0.5 + alpha) / (math.sqrt(math.pi) * abs(math.gamma(-alpha)))


def _image_kernel(s, length):
    # S(u) = sum_{k>=1} (kL+u)^-s + (kL-u)^-s, tabulated on |u| <= 0.9 L
    v = np.linspace(-0.9, 0.9, 8193)
    S = (special.zeta(s, 1.0 + v) + special.zeta(s, 1.0 - v)) * length ** (-s)
    return CubicSpline(v * length, S)


def frac_laplacian_profile(profile, alpha, grid, n_nodes=41):
    """(-Delta)^alpha of an analytic profile on the whole line.

    ``profile`` is a vectorized callable w(x).  The FFT result is exact for
    the periodic extension of w; the difference to the whole-line operator
    is a smooth function on the non-guard region, evaluated at Chebyshev
    nodes by quadrature and interpolated.  Guard-band values are left
    uncorrected.
    """
    _check_alpha(alpha)
    x = grid.x
    w = np.asarray(profile(x), dtype=float)
    out = frac_laplacian(w, alpha, grid)
    if alpha == 1.0:
        return out  # local operator: no image contribution
    L = grid.length
    s = 1.0 + 2.0 * alpha
    half = 0.5 * L
    a = 3.0 * L / 8.0
    k = np.arange(n_nodes)
    nodes = a * np.cos(np.pi * (k + 0.5) / n_nodes)
    S = _image_kernel(s, L)
    periodic = np.array([np.sum(w * S(x - xn)) * grid.dx for xn in nodes])
    outer = np.empty(n_nodes)
    for idx, xn in enumerate(nodes):
        # y = half / tau maps [half, inf) onto (0, 1]
        def right(tau, xn=xn):
            y = half / tau
            return profile(np.array([y]))[0] * (y - xn) ** (-s) * half / tau**2

        def left(tau, xn=xn):
            y = half / tau
            return profile(np.array([-y]))[0] * (y + xn) ** (-s) * half / tau**2

        outer[idx] = (
            integrate.quad(right, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-12)[0]
            + integrate.quad(left, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-12)[0]
        )
    corr = frac_laplacian_constant(alpha) * (outer - periodic)
    inner = np.abs(x) <= a
    out[inner] -= BarycentricInterpolator(nodes, corr)(x[inner])
    return out


# -- heat kernels ----------------------------------------------------------------


@dataclass(frozen=True)
class KernelProfile:
    alpha: float
    t: float
    x: np.ndarray
    values: np.ndarray
    tail_constant_upper: float
    tail_constant_lower: float
    dx: float
    length: float
    whole_line: bool = False

    @property
    def mass(self):
        return float(np.sum(self.values) * self.dx)


def centered_kernel(symbol, grid):
    """Density on ``grid`` (origin at index n/2) from an rfft-layout symbol."""
    return np.fft.fftshift(irfft(symbol, grid.n), axes=-1) / grid.dx


def _tail_series_coefficients(alpha, t, y_min, rtol=1e-17, max_terms=60):
    """Terms (c_n, s_n) with p(t, y) ~ sum c_n |y|^(-s_n) for |y| >= y_min.

    This is the large-|y| expansion of the symmetric stable density; it
    converges for alpha <= 1/2 and is asymptotic otherwise, so it is
    truncated at its smallest term.  All terms vanish at alpha = 1.
    """
    terms = []
    prev = math.inf
    for n in range(1, max_terms + 1):
        sn = 1.0 + 2.0 * alpha * n
        sin = math.sin(math.pi * alpha * n)
        if abs(sin) < 1e-15:
            continue
        logc = math.lgamma(sn) - math.lgamma(n + 1) + n * math.log(t) - math.log(math.pi)
        c = (-1) ** (n + 1) * sin * math.exp(logc)
        size = abs(c) * y_min ** (-sn)
        if size > prev:
            break
        terms.append((c, sn))
        if terms and size < rtol * abs(terms[0][0]) * y_min ** (-terms[0][1]):
            break
        prev = size
    return terms


def image_sum(alpha, t, x, length):
    """sum over k != 0 of p_alpha(t, x + kL), for |x| <= L/2."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if alpha == 1.0:
        return out
    for c, sn in _tail_series_coefficients(alpha, t, 0.5 * length):
        out += c * length ** (-sn) * (special.zeta(sn, 1.0 + x / length) + special.zeta(sn, 1.0 - x / length))
    return out


def heat_kernel(alpha, t, grid, whole_line=False):
    """Heat kernel of (-Delta)^alpha at time t sampled on ``grid``.

    By default this is the kernel of the torus (unit mass, exact semigroup).
    With ``whole_line`` the periodic images are subtracted, giving the
    kernel of the real line restricted to the box; its mass falls short of
    one by the tail mass beyond L/2.
    """
    if not t > 0:
        raise DomainError("heat kernel needs t > 0")
    vals = centered_kernel(diffusion_symbol(alpha, t, grid), grid)
    peak = float(vals.max())
    if vals.min() < -1e-12 * peak:
        raise CertificateError(f"heat kernel has negative values down to {vals.min():.3e}")
    vals = np.maximum(vals, 0.0)  # roundoff-level negatives only
    x = grid.x
    L = grid.length
    if whole_line:
        vals = vals - image_sum(alpha, t, x, L)
    win = (np.abs(x) >= L / 16) & (np.abs(x) <= L / 8)
    ax = np.abs(x[win])
    ratio = vals[win] * (t ** (1.0 / (2 * alpha) + 1.0) + ax ** (1.0 + 2 * alpha)) / t
    return KernelProfile(
        alpha=float(alpha),
        t=float(t),
        x=x,
        values=vals,
        tail_constant_upper=float(ratio.max()),
        tail_constant_lower=float(ratio.min()),
        dx=grid.dx,
        length=L,
        whole_line=bool(whole_line),
    )


@dataclass(frozen=True)
class TailFit:
    slope: float
    constant: float
    algebraic: bool
    half_slopes: tuple
    window: tuple


def default_tail_window(length):
    """One decade ending at the edge of the core region."""
    return (length / 80.0, length / 8.0)


def _log_sample_indices(x, lo, hi, count=64):
    targets = np.geomspace(lo, hi, count)
    dx = x[1] - x[0]
    idx = np.unique(np.clip(np.rint((targets - x[0]) / dx).astype(int), 0, x.size - 1))
    return idx[(x[idx] >= lo * (1 - 1e-12)) & (x[idx] <= hi * (1 + 1e-12))]


def tail_slope(x, values, window, count=64):
    """Log-log fit of ``values`` on |x| in ``window``, both sides pooled.

    Returns (slope, intercept, n_used); points at or below roundoff level
    are dropped.
    """
    lo, hi = window
    values = np.asarray(values, dtype=float)
    floor = 1e-14 * np.max(np.abs(values))
    xs, ys = [], []
    for sign in (1.0, -1.0):
        xx = sign * x
        order = np.argsort(xx)
        idx = _log_sample_indices(xx[order], lo, hi, count)
        v = values[order][idx]
        keep = v > floor
        xs.append(xx[order][idx][keep])
        ys.append(v[keep])
    xs = np.concatenate(xs)
    ys = np.concatenate(ys)
    if xs.size < 4:
        return float("nan"), float("nan"), int(xs.size)
    slope, icpt = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(icpt), int(xs.size)


def kernel_tail_fit(profile, window=None):
    """Fit log p against log|x| on a window of at least one decade.

    The fit is flagged non-algebraic when the profile has fallen to the
    roundoff floor in the window or when the two halves of the window give
    slopes that differ by more than 10%.
    """
    L = profile.length
    if window is None:
        window = default_tail_window(L)
    lo, hi = float(window[0]), float(window[1])
    if lo <= 0 or hi <= lo:
        raise ValidationError("tail window must satisfy 0 < lo < hi")
    if hi / lo < 10.0 * (1 - 1e-9):
        raise ValidationError("tail window must span at least one decade")
    if hi >= 3.0 * L / 8.0:
        raise ValidationError("tail window reaches the wrap-around guard band")
    slope, icpt, used = tail_slope(profile.x, profile.values, (lo, hi))
    mid = math.sqrt(lo * hi)
    s1, _, n1 = tail_slope(profile.x, profile.values, (lo, mid))
    s2, _, n2 = tail_slope(profile.x, profile.values, (mid, hi))
    # count the roundoff-floor points that tail_slope dropped
    expected = len(_log_sample_indices(np.sort(profile.x), lo, hi))
    algebraic = (
        used >= 2 * expected - 2
        and np.isfinite(s1)
        and np.isfinite(s2)
        and abs(s1 - s2) <= 0.1 * abs(slope)
    )
    return TailFit(
        slope=slope,
        constant=math.exp(icpt) if np.isfinite(icpt) else float("nan"),
        algebraic=bool(algebraic),
        half_slopes=(s1, s2),
        window=(lo, hi),
    )


# -- convolution lower bound used by the lower-bound induction ------------


@dataclass
class ConvolutionBoundReport:
    alpha_i: float
    alpha: float
    t: float
    s: float
    min_ratio: float
    min_ratio_refined: float
    argmin_x: float
    grid_stable: bool
    divergent: bool = False

    @property
    def ok(self):
        return self.min_ratio > 0 and self.grid_stable


def _convolution_ratio(alpha_i, alpha, t, s, grid):
    x = grid.x
    d = 1.0
    g = 1.0 / (s ** (d / (2 * alpha) + 1.0) + np.abs(x) ** (d + 2 * alpha))
    lhs = apply_symbol(g, diffusion_symbol(alpha_i, t - s, grid), grid.n)
    rhs = (t - s) ** (-d / (2 * alpha_i)) * g
    core = grid.core_mask()
    ratio = lhs[core] / rhs[core]
    k = int(np.argmin(ratio))
    return float(ratio[k]), float(x[core][k]), lhs


def kernel_convolution_bound_check(alpha_i, alpha, t, s, grid, stable_rtol=0.02):
    """Ratio of p_{alpha_i}(t-s) * (s^(1/2alpha+1) + |.|^(1+2alpha))^-1 to
    its claimed lower bound (t-s)^(-1/2alpha_i) / (s^(..) + |x|^(..)).

    The minimum over the core is recomputed on a grid with twice the points;
    ``grid_stable`` records agreement within ``stable_rtol``.  At s = 0 the
    convolved profile is not integrable at the origin and the left side is
    infinite, so the bound holds trivially.
    """
    _check_alpha(alpha_i)
    _check_alpha(alpha)
    if t < 1:
        raise DomainError("bound is stated for t >= 1")
    if s < 0 or s > t - 1:
        raise DomainError("s must lie in [0, t-1]")
    if s == 0:
        return ConvolutionBoundReport(alpha_i, alpha, t, s, math.inf, math.inf, 0.0, True, divergent=True)
    r1, xm, _ = _convolution_ratio(alpha_i, alpha, t, s, grid)
    r2, _, _ = _convolution_ratio(alpha_i, alpha, t, s, grid.refined(2))
    stable = abs(r1 - r2) <= stable_rtol * abs(r2)
    report = ConvolutionBoundReport(alpha_i, alpha, t, s, r1, r2, xm, bool(stable))
    if not r1 > 0:
        raise CertificateError(f"convolution ratio is nonpositive ({r1:.3e})", report)
    return report
