"""Explicit algebraic envelopes and the bound checks built on them.

Envelopes have the form

    v(t, x) = a (1 + b(t) |x|^p)^(-1/delta) phi1,      p = delta (d + 2 alpha),

with b(t) = (s D/lambda1 + B^-theta exp(theta delta lambda1 t))^(-1/theta),
theta = 2 alpha / p, and s = -1 for the supersolution, +1 for the
subsolution.  Then b solves b' = -delta lambda1 b + s delta D b^(theta+1).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from fracspread.errors import CertificateError, ConsistencyError, DomainError, InsufficientDataError, ValidationError
from fracspread.model import _reaction, kpp_constants
from fracspread.spectral import Grid, default_tail_window, frac_laplacian_profile, tail_slope

SUPER = "super"
SUB = "sub"


# -- homogeneity constant ------------------------------------------------------


def profile_power(delta, d, alpha_min):
    return delta * (d + 2.0 * alpha_min)


def homogeneity_ratios(delta, d, alpha_i, alpha_min, grid):
    """((-Delta)^alpha_i w) / w on the grid, w = (1 + |x|^p)^(-1/delta)."""
    p = profile_power(delta, d, alpha_min)
    if p < 2.0 - 1e-12:
        raise DomainError(f"delta (d + 2 alpha) = {p:.6g} is below 2")

    def w(x):
        return (1.0 + np.abs(x) ** p) ** (-1.0 / delta)

    return frac_laplacian_profile(w, alpha_i, grid) / w(grid.x)


@dataclass(frozen=True)
class HomogeneityResult:
    D: float
    D_refined: float
    per_component: tuple

    @property
    def drift(self):
        return abs(self.D - self.D_refined) / self.D_refined


def homogeneity_constant(delta, d, alphas, grid=None, max_drift=0.05, detail=False):
    """D = max_i sup_core |(-Delta)^alpha_i w| / w, checked under n -> 2n."""
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    alpha_min = min(alphas)
    if delta * (d + 2 * alpha_min) < 2.0 - 1e-12:
        raise DomainError("delta is below the technical threshold 2/(d + 2 alpha)")
    if grid is None:
        grid = Grid(2**14, 2.0**10)

    def sup(g):
        core = g.core_mask()
        return [float(np.max(np.abs(homogeneity_ratios(delta, d, a, alpha_min, g)[core]))) for a in alphas]

    per = sup(grid)
    D = max(per)
    D2 = max(sup(grid.refined(2)))
    res = HomogeneityResult(D=D, D_refined=D2, per_component=tuple(per))
    if res.drift >= max_drift:
        raise ConsistencyError(f"D changes by {100 * res.drift:.2f}% under grid refinement")
    return res if detail else D


# -- envelopes ------------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    sign: str
    a: float
    B_env: float
    D: float
    delta: float
    lambda1: float
    phi1: np.ndarray
    alpha_min: float
    dim: int = 1
    t_shift: float = 0.0

    @property
    def p(self):
        return profile_power(self.delta, self.dim, self.alpha_min)

    @property
    def theta(self):
        return 2.0 * self.alpha_min / self.p

    @property
    def _s(self):
        return -1.0 if self.sign == SUPER else 1.0

    def b(self, t):
        t = np.asarray(t, dtype=float)
        th = self.theta
        X = self._s * self.D / self.lambda1 + self.B_env ** (-th) * np.exp(th * self.delta * self.lambda1 * t)
        return X ** (-1.0 / th)

    def b_prime(self, t):
        b = self.b(t)
        return -self.delta * self.lambda1 * b + self._s * self.delta * self.D * b ** (self.theta + 1.0)

    def b_ode_residual(self, t):
        """b' + delta lambda1 b - s delta D b^(theta+1) with b' by direct
        differentiation of the closed form."""
        t = np.asarray(t, dtype=float)
        th, lam, dl = self.theta, self.lambda1, self.delta
        E = self.B_env ** (-th) * np.exp(th * dl * lam * t)
        X = self._s * self.D / lam + E
        db = (-1.0 / th) * X ** (-1.0 / th - 1.0) * th * dl * lam * E
        b = X ** (-1.0 / th)
        return db + dl * lam * b - self._s * dl * self.D * b ** (th + 1.0)


def super_admissible_bound(D, lambda1, delta, d, alpha_min):
    return (1.0 + D / lambda1) ** (-profile_power(delta, d, alpha_min) / (2.0 * alpha_min))


def build_supersolution(model, eig, D, B_env=None, margin=1.01):
    """Supersolution with a = margin * ((D + lambda1)/c_delta1)^(1/delta) max(1/phi1)."""
    lam = eig.lambda1
    if not lam > 0:
        raise DomainError("supersolution needs lambda1 > 0")
    upper = super_admissible_bound(D, lam, model.delta, model.dim, model.alpha_min)
    if B_env is None:
        B_env = 0.5 * upper
    if not (0.0 < B_env < upper):
        raise ValidationError(f"B must lie in (0, {upper:.6g}), got {B_env}")
    c1, _ = kpp_constants(model)
    phi = np.asarray(eig.phi1, dtype=float)
    a = margin * ((D + lam) / c1) ** (1.0 / model.delta) * float(np.max(1.0 / phi))
    env = Envelope(SUPER, a, float(B_env), float(D), model.delta, lam, phi, model.alpha_min, model.dim)
    if not env.b(0.0) <= 1.0 + 1e-12:
        raise ConsistencyError("b(0) exceeds 1")
    return env


def lower_profile(c_lower, gamma_mm, t, x, d, alpha_min):
    """c t e^{-gamma_mm t} / (t^(d/2alpha + 1) + |x|^(d + 2alpha))."""
    return c_lower * t * math.exp(-gamma_mm * t) / (t ** (d / (2 * alpha_min) + 1.0) + np.abs(x) ** (d + 2 * alpha_min))


def min_sub_t1(D, lambda1):
    return max(1.0, 2.0 * D / lambda1)


def build_subsolution(model, eig, D, t1, c_lower, gamma_mm, grid=None):
    """Subsolution started below the algebraic lower-bound profile at t1.

    a = c_lower e^{-gamma_mm t1} / (2 max phi1 t1^(d/2alpha)),
    B = (2/t1)^((d + 2alpha) delta / 2alpha).
    """
    lam = eig.lambda1
    d, am, dl = model.dim, model.alpha_min, model.delta
    t_min = min_sub_t1(D, lam)
    if t1 < t_min - 1e-12:
        raise ValidationError(f"t1 must be at least max(1, 2D/lambda1) = {t_min:.6g}")
    if not c_lower > 0:
        raise ValidationError("lower-bound constant must be positive")
    phi = np.asarray(eig.phi1, dtype=float)
    a = c_lower * math.exp(-gamma_mm * t1) / (2.0 * float(phi.max()) * t1 ** (d / (2 * am)))
    _, c2 = kpp_constants(model)
    cap = (float(phi.min()) * lam / (2.0 * c2)) ** (1.0 / dl)
    if a > cap:
        # a decreases like e^{-gamma_mm t1}; solve for the t1 that meets the cap
        t_try = t1
        while c_lower * math.exp(-gamma_mm * t_try) / (2.0 * phi.max() * t_try ** (d / (2 * am))) > cap:
            t_try += 0.25
        raise ValidationError(f"amplitude {a:.6g} exceeds the cap {cap:.6g}; reduce a or use t1 >= {t_try:.6g}")
    B = (2.0 / t1) ** ((d + 2 * am) * dl / (2 * am))
    env = Envelope(SUB, a, B, float(D), dl, lam, phi, am, d, t_shift=float(t1))
    if grid is not None:
        x = grid.x
        v0 = eval_envelope(env, 0.0, x)
        lp = lower_profile(c_lower, gamma_mm, t1, x, d, am)
        if np.any(v0 > lp[None, :] * (1 + 1e-12)):
            raise ConsistencyError("subsolution at t = 0 is not below the lower-bound profile at t1")
    return env


def eval_envelope(env, t, x):
    """(m, len(x)) array of envelope values at envelope time t."""
    if t < 0:
        raise DomainError("envelope time must be nonnegative")
    x = np.asarray(x, dtype=float)
    prof = (1.0 + env.b(t) * np.abs(x) ** env.p) ** (-1.0 / env.delta)
    return env.a * env.phi1[:, None] * prof[None, :]


def envelope_time_derivative(env, t, x):
    x = np.asarray(x, dtype=float)
    xp = np.abs(x) ** env.p
    base = 1.0 + env.b(t) * xp
    d_prof = (-1.0 / env.delta) * base ** (-1.0 / env.delta - 1.0) * xp * env.b_prime(t)
    return env.a * env.phi1[:, None] * d_prof[None, :]


def envelope_residual(env, model, t, grid):
    """N_i[v] = d_t v_i + (-Delta)^alpha_i v_i - f_i(v) on the grid."""
    x = grid.x
    v = eval_envelope(env, t, x)
    bt = float(env.b(t))
    lap = np.empty_like(v)
    for i, a_i in enumerate(model.alpha):
        amp = env.a * env.phi1[i]

        def prof(y, amp=amp):
            return amp * (1.0 + bt * np.abs(y) ** env.p) ** (-1.0 / env.delta)

        lap[i] = frac_laplacian_profile(prof, a_i, grid)
    return envelope_time_derivative(env, t, x) + lap - _reaction(model, v)


@dataclass
class CertificateReport:
    rows: list = field(default_factory=list)  # (check, t, i, worst_x, value, tolerance, pass)

    @property
    def ok(self):
        return all(r[6] for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r[6]]

    def raise_if_failed(self):
        bad = self.failures()
        if bad:
            r = bad[0]
            raise CertificateError(
                f"{r[0]} failed at t = {r[1]:.6g}, component {r[2]}, x = {r[3]:.6g}: value {r[4]:.3e}, "
                f"tolerance {r[5]:.3e}",
                self,
            )


def residual_certificate(env, model, times, grid, rtol=1e-6):
    """Sign check of the envelope residual on the core region.

    Supersolution: min >= -rtol a.  Subsolution: max <= rtol a.
    """
    report = CertificateReport()
    core = grid.core_mask()
    xc = grid.x[core]
    tol = float(rtol * env.a)
    name = f"{env.sign}_residual"
    for t in times:
        R = envelope_residual(env, model, t, grid)[:, core]
        for i in range(model.m):
            if env.sign == SUPER:
                k = int(np.argmin(R[i]))
                val = float(R[i, k])
                ok = val >= -tol
            else:
                k = int(np.argmax(R[i]))
                val = float(R[i, k])
                ok = val <= tol
            report.rows.append((name, float(t), i + 1, float(xc[k]), val, tol, bool(ok)))
    return report


# -- trajectory bounds -------------------------------------------------------------


@dataclass
class LowerBoundReport:
    c_lower: float
    fit_window: tuple
    later_min_ratio: float
    rows: list  # (t, i, min ratio, argmin x)

    @property
    def ok(self):
        return self.c_lower > 0 and self.later_min_ratio >= self.c_lower


def lower_bound_ratios(state, gamma_mm, d, alpha_min):
    grid = state.grid
    core = grid.core_mask()
    x = grid.x[core]
    t = state.t
    denom = lower_profile(1.0, gamma_mm, t, x, d, alpha_min)
    return state.u[:, core] / denom[None, :], x


def lower_bound_check(traj, gamma_mm, d=1, alpha_min=0.5, fit_window=(1.0, 2.0)):
    """Fit c on snapshots in ``fit_window`` (t >= 1) and test later snapshots."""
    rows = []
    fit_vals, later_vals = [], []
    for s in traj.snapshots:
        if s.t < 1.0 - 1e-12:
            continue
        ratio, x = lower_bound_ratios(s, gamma_mm, d, alpha_min)
        for i in range(ratio.shape[0]):
            k = int(np.argmin(ratio[i]))
            rows.append((s.t, i + 1, float(ratio[i, k]), float(x[k])))
            if fit_window[0] - 1e-12 <= s.t <= fit_window[1] + 1e-12:
                fit_vals.append(float(ratio[i, k]))
            elif s.t > fit_window[1]:
                later_vals.append(float(ratio[i, k]))
    if not fit_vals:
        raise InsufficientDataError("no snapshots in the lower-bound fit window")
    c = min(fit_vals)
    report = LowerBoundReport(c, tuple(fit_window), min(later_vals) if later_vals else math.inf, rows)
    if not c > 0:
        raise CertificateError(f"lower-bound constant is not positive ({c:.3e})", report)
    return report


@dataclass
class UpperBoundReport:
    rows: list  # (t, i, C1, tail slope)
    growth_slopes: tuple
    lambda1: float
    max_rate: float = 1.2

    @property
    def ok(self):
        finite = all(math.isfinite(r[2]) for r in self.rows)
        return finite and all(s <= self.max_rate * self.lambda1 for s in self.growth_slopes)


def upper_bound_check(traj, lambda1, d=1, alpha_min=0.5, window=None, t_min_growth=1.0, max_rate=1.2):
    """C1(t) = max over the tail window of u_i |x|^(d + 2alpha), per snapshot.

    The growth rate is the least-squares slope of log C1 over snapshots with
    t >= ``t_min_growth``.
    """
    grid = traj.grid
    if window is None:
        window = default_tail_window(grid.length)
    x = grid.x
    sel = (np.abs(x) >= window[0]) & (np.abs(x) <= window[1])
    pw = np.abs(x[sel]) ** (d + 2 * alpha_min)
    rows = []
    m = traj.snapshots[0].m
    logs = [[] for _ in range(m)]
    for s in traj.snapshots:
        for i in range(m):
            C1 = float(np.max(s.u[i, sel] * pw))
            slope = float("nan")
            if C1 > 0:
                slope, _, _ = tail_slope(x, s.u[i], window)
            rows.append((s.t, i + 1, C1, slope))
            if s.t >= t_min_growth - 1e-12 and C1 > 0:
                logs[i].append((s.t, math.log(C1)))
    slopes = []
    for series in logs:
        if len(series) >= 2:
            tt, ll = np.array(series).T
            slopes.append(float(np.polyfit(tt, ll, 1)[0]))
    return UpperBoundReport(rows, tuple(slopes), float(lambda1), max_rate)


# -- alignment and front constants ----------------------------------------------


def align_supersolution(env, state, tol=1e-6, t_max=200.0):
    """Smallest s >= 0 with v(s, x) >= u(t0, x) on the whole grid, by bisection.

    v increases in its time argument, so the condition is monotone in s.
    """
    x = state.grid.x

    def ok(s):
        return bool(np.all(eval_envelope(env, s, x) >= state.u))

    if ok(0.0):
        return 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2
        if hi > t_max:
            raise ConsistencyError("supersolution never dominates the state")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def super_domination(env, traj, t0, t1):
    """max over snapshots t >= t0 of u - v(t + t1 - t0)."""
    worst = -math.inf
    for s in traj.snapshots:
        if s.t < t0 - 1e-12:
            continue
        v = eval_envelope(env, s.t + t1 - t0, s.grid.x)
        worst = max(worst, float(np.max(s.u - v)))
    return worst


def sub_minorization(env, traj):
    """max over snapshots t >= t1 of v(t - t1) - u."""
    t1 = env.t_shift
    worst = -math.inf
    for s in traj.snapshots:
        if s.t < t1 - 1e-12:
            continue
        v = eval_envelope(env, s.t - t1, s.grid.x)
        worst = max(worst, float(np.max(v - s.u)))
    return worst


@dataclass(frozen=True)
class FrontBoundConstants:
    c_upper: float
    C_lower: float
    eps: np.ndarray
    mu: np.ndarray
    tau: float
    c_per_component: np.ndarray


def front_constants(env_super, env_sub, mu, t0, t1):
    """Radii constants of the level-set bounds.

    c_i^(d+2alpha) = a phi_i e^{lambda1 (t1 - t0)} / (mu_i B^(1/delta))  (super)
    eps_i = a phi_i / 2^(1/delta),  C^(d+2alpha) = e^{-lambda1 t1} B^(-1/delta)  (sub)
    where t1 of the subsolution is its own shift.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValidationError("levels must be positive")
    sp = env_super
    q = sp.dim + 2 * sp.alpha_min
    # c[i, k] for component i and level mu_k
    num = sp.a * sp.phi1[:, None] * math.exp(sp.lambda1 * (t1 - t0))
    c = (num / (mu[None, :] * sp.B_env ** (1.0 / sp.delta))) ** (1.0 / q)
    sb = env_sub
    t1s = sb.t_shift
    eps = sb.a * sb.phi1 / 2.0 ** (1.0 / sb.delta)
    C = (math.exp(-sb.lambda1 * t1s) * sb.B_env ** (-1.0 / sb.delta)) ** (1.0 / (sb.dim + 2 * sb.alpha_min))
    return FrontBoundConstants(
        c_upper=float(c.max()),
        C_lower=float(C),
        eps=eps,
        mu=mu,
        tau=float(max(t0, t1s)),
        c_per_component=c,
    )
