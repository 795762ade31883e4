"""Level-set radii and the exponential spreading rate."""
import math
from dataclasses import dataclass, field

import numpy as np

from fracspread.errors import DomainError, InsufficientDataError

MU_FLOOR = 1e-14


def _check_mu(mu):
    if not mu > 0:
        raise DomainError("level mu must be positive")
    if mu < MU_FLOOR:
        raise DomainError(f"level {mu:.3e} is below the floating-point floor {MU_FLOOR:.0e}")


def _right_edge(x, u, mu):
    above = np.nonzero(u >= mu)[0]
    if above.size == 0:
        return None
    k = int(above[-1])
    if k + 1 >= u.size:
        return float(x[k])
    return float(x[k] + (u[k] - mu) / (u[k] - u[k + 1]) * (x[k + 1] - x[k]))


def level_radius(state, i, mu, side=None):
    """Largest |x| with u_i(x) >= mu, linearly interpolated.

    ``side`` restricts to x >= 0 ("right") or x <= 0 ("left"); the default
    takes the larger of the two.  Returns None when max u_i < mu.
    """
    _check_mu(mu)
    x = state.grid.x
    u = state.u[i]
    if side not in (None, "right", "left"):
        raise ValueError(f"side must be 'right', 'left' or None, got {side!r}")
    c = state.grid.center  # x[c] == 0
    right = left = None
    if side in (None, "right"):
        right = _right_edge(x[c:], u[c:], mu)
    if side in (None, "left"):
        r = _right_edge(-x[c::-1], u[c::-1], mu)
        left = r
    vals = [v for v in (right, left) if v is not None]
    if not vals:
        return None
    return max(vals)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    n: int


def fit_exponent(samples, window=None):
    """Least-squares fit of ln R against t over samples inside ``window``."""
    pts = [(t, R) for t, R in samples if R is not None and R > 0]
    if window is not None:
        pts = [(t, R) for t, R in pts if window[0] - 1e-12 <= t <= window[1] + 1e-12]
    if len(pts) < 5:
        raise InsufficientDataError(f"need at least 5 samples in the fit window, got {len(pts)}")
    t, R = np.array(pts).T
    y = np.log(R)
    tm = t.mean()
    Sxx = float(np.sum((t - tm) ** 2))
    if Sxx == 0:
        raise InsufficientDataError("all samples share one time")
    slope = float(np.sum((t - tm) * (y - y.mean())) / Sxx)
    icpt = float(y.mean() - slope * tm)
    resid = y - (icpt + slope * t)
    stderr = math.sqrt(float(resid @ resid) / (len(t) - 2) / Sxx)
    return ExponentFit(slope, icpt, stderr, len(t))


def theoretical_exponent(lambda1, d, alpha_min):
    """lambda1 / (d + 2 alpha)."""
    if not lambda1 > 0:
        raise DomainError(f"lambda1 = {lambda1} <= 0: no exponential spreading is predicted")
    if not (0 < alpha_min <= 1) or d < 1:
        raise DomainError("need d >= 1 and alpha in (0, 1]")
    return lambda1 / (d + 2.0 * alpha_min)


@dataclass
class FrontTrace:
    component: int  # 1-based
    mu: float
    samples: list
    predicted: float
    fit: ExponentFit = None
    status: str = "ok"

    @property
    def rel_err(self):
        if self.fit is None:
            return float("nan")
        return abs(self.fit.slope - self.predicted) / self.predicted


def trace_fronts(traj, i, mu, side=None):
    return [(s.t, level_radius(s, i, mu, side)) for s in traj.snapshots]


def onset_time(samples, dx):
    for t, R in samples:
        if R is not None and R >= 10 * dx:
            return t
    return None


@dataclass
class ExponentReport:
    traces: list
    window: tuple
    predicted: float
    mu_spread: float = float("nan")
    component_spread: float = float("nan")
    rows: list = field(default_factory=list)

    def within(self, rtol):
        return all(tr.fit is not None and tr.rel_err <= rtol for tr in self.traces)


def exponent_report(traj, mu_list, lambda1, alpha_min, d=1, window=None):
    """Fit every (component, level) trace; insufficient data is flagged, not raised."""
    grid = traj.grid
    t_end = float(traj.times[-1])
    if window is None:
        window = (0.5 * t_end, 0.9 * t_end)
    predicted = theoretical_exponent(lambda1, d, alpha_min)
    lo, hi = 10 * grid.dx, grid.length / 4
    m = traj.snapshots[0].m
    traces = []
    for i in range(m):
        for mu in mu_list:
            samples = trace_fronts(traj, i, mu)
            valid = [(t, R) for t, R in samples if R is not None and lo <= R <= hi]
            tr = FrontTrace(i + 1, float(mu), samples, predicted)
            try:
                tr.fit = fit_exponent(valid, window)
            except InsufficientDataError as exc:
                tr.status = f"insufficient data: {exc}"
            traces.append(tr)
    rep = ExponentReport(traces, tuple(window), predicted)
    fitted = [tr for tr in traces if tr.fit is not None]
    mu_spreads, comp_spreads = [], []
    for i in range(1, m + 1):
        s = [tr.fit.slope for tr in fitted if tr.component == i]
        if len(s) >= 2:
            mu_spreads.append(max(s) - min(s))
    for mu in mu_list:
        s = [tr.fit.slope for tr in fitted if tr.mu == float(mu)]
        if len(s) >= 2:
            comp_spreads.append(max(s) - min(s))
    rep.mu_spread = max(mu_spreads) if mu_spreads else float("nan")
    rep.component_spread = max(comp_spreads) if comp_spreads else float("nan")
    for tr in traces:
        if tr.fit is None:
            rep.rows.append((tr.component, tr.mu, float("nan"), float("nan"), predicted, float("nan"), tr.status))
        else:
            rep.rows.append((tr.component, tr.mu, tr.fit.slope, tr.fit.stderr, predicted, tr.rel_err, tr.status))
    return rep
