"""Time integration by Strang splitting.

One step of size dt is
    reaction(dt/2) -> diffusion(dt) -> reaction(dt/2)
where the reaction is one classical RK4 step of the pointwise ODE and the
diffusion is the exact Fourier multiplier of each component.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from fracspread import kernels
from fracspread.errors import BlowUpError, ConsistencyError, DomainError, GuardBandError, ValidationError
from fracspread.spectral import diffusion_symbol, irfft, rfft

BOX_RTOL = 1e-9


@dataclass
class FieldState:
    t: float
    u: np.ndarray  # (m, n)
    grid: object

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        if self.u.shape[1] != self.grid.n:
            raise ValidationError(f"field has {self.u.shape[1]} points, grid has {self.grid.n}")

    @property
    def m(self):
        return self.u.shape[0]

    def copy(self):
        return FieldState(self.t, self.u.copy(), self.grid)

    def shifted(self, k):
        """Periodic shift by k cells."""
        return FieldState(self.t, np.roll(self.u, k, axis=1), self.grid)


@dataclass
class Trajectory:
    snapshots: list
    dt: float
    grid: object
    model_hash: str = ""
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    def at(self, t, tol=1e-9):
        for s in self.snapshots:
            if abs(s.t - t) <= tol:
                return s
        raise KeyError(f"no snapshot at t = {t}")

    def __len__(self):
        return len(self.snapshots)


def make_initial(kind, h, grid, r=1.0, alpha=None, lambda_big=None, center=0.0):
    """Initial data of compact support or with algebraic tails.

    compact_bump:   h_i * max(0, 1 - ((x - center)/r)^2)^2
    algebraic_tail: h_i / (1 + |x - center|^(1 + 2 alpha_i))
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.all(h == 0):
        raise ValidationError("initial data must not vanish identically")
    if np.any(h <= 0):
        raise ValidationError("amplitudes h_i must be positive")
    if lambda_big is not None and np.any(h > lambda_big):
        raise ValidationError(f"amplitudes must not exceed Lambda = {lambda_big}")
    x = grid.x - center
    if kind == "compact_bump":
        if not r > 0:
            raise ValidationError("bump radius must be positive")
        if abs(center) + r >= grid.length / 8:
            raise ValidationError("bump reaches beyond the core region |x| < L/8")
        prof = np.maximum(0.0, 1.0 - (x / r) ** 2) ** 2
        u = h[:, None] * prof[None, :]
    elif kind == "algebraic_tail":
        if alpha is None:
            raise ValidationError("algebraic_tail needs the exponents alpha")
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if alpha.size != h.size:
            raise ValidationError("alpha and h must have the same length")
        u = h[:, None] / (1.0 + np.abs(x)[None, :] ** (1.0 + 2.0 * alpha[:, None]))
    else:
        raise ValidationError(f"unknown initial condition kind {kind!r}")
    return FieldState(0.0, u, grid)


def _react(u, model, h):
    return kernels.reaction_rk4(u, model.K_array, model.r_array, model.q_array, model.delta, model.lambda_big, h)


def diffuse(u, alphas, dt, grid):
    uh = rfft(u)
    for i, a in enumerate(alphas):
        uh[i] *= diffusion_symbol(a, dt, grid)
    return irfft(uh, grid.n)


def step(state, model, dt, reaction=True):
    if not dt > 0:
        raise DomainError("dt must be positive")
    u = state.u
    if reaction:
        u = _react(u, model, 0.5 * dt)
    u = diffuse(u, model.alpha, dt, state.grid)
    if reaction:
        u = _react(u, model, 0.5 * dt)
    if not np.all(np.isfinite(u)):
        bad = np.argwhere(~np.isfinite(u))[0]
        raise BlowUpError(
            f"non-finite value at t = {state.t + dt:.6g}, component {bad[0] + 1}, x = {state.grid.x[bad[1]]:.6g}"
        )
    return FieldState(state.t + dt, u, state.grid)


def _segments(t0, targets, dt):
    """Yield (target, n_steps, h) covering each interval with equal steps <= dt."""
    t = t0
    for target in targets:
        span = target - t
        if span <= 1e-12:
            yield target, 0, 0.0
            continue
        n = max(1, math.ceil(span / dt - 1e-9))
        yield target, n, span / n
        t = target


class _Monitor:
    def __init__(self, model, grid, guard_tol, check_box):
        self.lam = model.lambda_big
        # |x| >= 3L/8 is the first and last eighth of the index range
        n = grid.n
        self.guard = (slice(0, n // 8 + 1), slice(7 * n // 8, n)) if guard_tol is not None else None
        self.guard_tol = guard_tol
        self.check_box = check_box
        self.box_low = 0.0
        self.box_high = 0.0
        self.guard_max = 0.0

    def __call__(self, state):
        u = state.u
        if self.check_box:
            lo = float(u.min())
            hi = float(u.max())
            self.box_low = min(self.box_low, lo)
            self.box_high = max(self.box_high, hi - self.lam)
            if lo < -BOX_RTOL * self.lam or hi > self.lam * (1 + BOX_RTOL):
                raise ConsistencyError(
                    f"state left the invariant box at t = {state.t:.6g}: min {lo:.3e}, max {hi:.6g}"
                )
        if self.guard is not None:
            g = max(float(u[:, sl].max()) for sl in self.guard)
            self.guard_max = max(self.guard_max, g)
            if g > self.guard_tol:
                raise GuardBandError(
                    f"solution reached {g:.3e} in the guard band |x| >= 3L/8 at t = {state.t:.6g} "
                    f"(tolerance {self.guard_tol:.3e}); enlarge the domain length L"
                )


def simulate(model, u0, grid=None, t_end=1.0, dt=0.01, snapshot_times=None, guard_tol="default",
             check_box=True, seed=0, progress=None):
    """Integrate from ``u0`` to ``t_end`` and keep snapshots.

    ``snapshot_times`` defaults to a 0.25 cadence.  The guard band is
    checked after every step; pass ``guard_tol=None`` to disable it (the
    default tolerance is 1e-6 Lambda).
    """
    grid = u0.grid if grid is None else grid
    if u0.m != model.m:
        raise ValidationError(f"initial state has {u0.m} components, model has {model.m}")
    if t_end < 0:
        raise DomainError("t_end must be nonnegative")
    if not dt > 0:
        raise DomainError("dt must be positive")
    if snapshot_times is None:
        snapshot_times = np.arange(0.0, t_end + 1e-12, 0.25)
    times = sorted(set(float(t) for t in snapshot_times) | {float(u0.t)})
    if times[0] < u0.t - 1e-12 or times[-1] > t_end + 1e-12:
        raise DomainError("snapshot times must lie in [0, t_end]")
    if guard_tol == "default":
        guard_tol = 1e-6 * model.lambda_big
    monitor = _Monitor(model, grid, guard_tol, check_box)
    if check_box and np.any(u0.u > model.lambda_big):
        raise DomainError("initial state exceeds the box [0, Lambda]")
    monitor(u0)

    start = time.perf_counter()
    state = u0.copy()
    snaps = [state]
    steps = 0
    for target, n, h in _segments(u0.t, [t for t in times if t > u0.t], dt):
        t_start = state.t
        for j in range(n):
            state = step(state, model, h)
            state.t = t_start + (j + 1) * h
            monitor(state)
            steps += 1
        state.t = target
        snaps.append(state)
        if progress is not None:
            progress(state)
    meta = {
        "steps": steps,
        "wall_seconds": time.perf_counter() - start,
        "backend": kernels.BACKEND,
        "box_min": monitor.box_low,
        "box_excess": monitor.box_high,
        "guard_max": monitor.guard_max,
        "guard_tol": guard_tol,
    }
    return Trajectory(snaps, dt, grid, model_hash=model.model_hash(), seed=seed, meta=meta)


def compare_evolutions(model, u0_low, u0_high, grid=None, t_end=1.0, dt=0.01, guard_tol=None):
    """Run both initial data in lockstep; return max over steps of (low - high)."""
    if np.any(u0_low.u > u0_high.u):
        raise DomainError("initial data must be ordered: low <= high")
    grid = u0_low.grid if grid is None else grid
    low, high = u0_low.copy(), u0_high.copy()
    worst = float(np.max(low.u - high.u))
    mon = _Monitor(model, grid, guard_tol, check_box=False)
    for _, n, h in _segments(0.0, [t_end], dt):
        for _ in range(n):
            low = step(low, model, h)
            high = step(high, model, h)
            mon(high)
            worst = max(worst, float(np.max(low.u - high.u)))
    return worst
