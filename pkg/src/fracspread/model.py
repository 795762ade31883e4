"""Cooperative saturating reaction term and its hypothesis checks.

The reaction family is

    f_i(s) = sum_{j != i} K_ij s_j + r_i s_i - q_i s_i**(1 + delta)

on the box [0, Lambda]^m.  Outside the box the saturation power is continued
linearly (zero below 0), which keeps F globally Lipschitz without touching
the dynamics inside the invariant box.
"""
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from fracspread.errors import DomainError, NumericalError, ValidationError
from fracspread.kernels import saturation, saturation_slope


def _as_tuple(v):
    return tuple(float(x) for x in np.asarray(v, dtype=float).ravel())


def _as_matrix_tuple(M):
    return tuple(tuple(float(x) for x in row) for row in np.asarray(M, dtype=float))


@dataclass(frozen=True)
class ModelSpec:
    """Immutable system definition.

    ``alpha`` is sorted nonincreasing with its last entry (the smallest
    exponent) strictly below one.  ``lambda_big`` is the box size.
    """

    alpha: tuple
    K: tuple
    r: tuple
    q: tuple
    delta: float
    lambda_big: float
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_tuple(self.alpha))
        object.__setattr__(self, "K", _as_matrix_tuple(self.K))
        object.__setattr__(self, "r", _as_tuple(self.r))
        object.__setattr__(self, "q", _as_tuple(self.q))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "lambda_big", float(self.lambda_big))
        object.__setattr__(self, "dim", int(self.dim))
        self._validate()

    def _validate(self):
        m = len(self.alpha)
        if m < 1:
            raise ValidationError("m must be at least 1")
        a = np.array(self.alpha)
        if np.any(a <= 0) or np.any(a > 1):
            raise ValidationError(f"alpha entries must lie in (0, 1], got {self.alpha}")
        if np.any(np.diff(a) > 0):
            raise ValidationError("alpha must be sorted nonincreasing")
        if a[-1] >= 1:
            raise ValidationError("the smallest exponent must be < 1")
        K = np.array(self.K)
        if K.shape != (m, m):
            raise ValidationError(f"K must be {m}x{m}, got shape {K.shape}")
        if np.any(np.diag(K) != 0):
            raise ValidationError("K must have a zero diagonal")
        off = K[~np.eye(m, dtype=bool)]
        if np.any(off <= 0):
            raise ValidationError("cooperativity requires K_ij > 0 for all i != j")
        if len(self.r) != m or len(self.q) != m:
            raise ValidationError("r and q must have m entries")
        if np.any(np.array(self.q) <= 0):
            raise ValidationError("saturation coefficients q must be positive")
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if not self.lambda_big > 1:
            raise ValidationError(f"box size Lambda must exceed 1, got {self.lambda_big}")
        threshold = 2.0 / (self.dim + 2.0 * a[-1])
        if self.delta < threshold:
            raise ValidationError(
                f"delta = {self.delta} is below the technical threshold 2/(d+2alpha) = {threshold:.6g}"
            )
        corner = K.sum(axis=1) + np.array(self.r) - np.array(self.q) * self.lambda_big**self.delta
        if np.any(corner > 0):
            bad = int(np.argmax(corner))
            raise ValidationError(
                f"F(Lambda*1) must be <= 0; row {bad} gives sum K + r - q Lambda^delta = {corner[bad]:.6g}"
            )

    @property
    def m(self):
        return len(self.alpha)

    @property
    def alpha_min(self):
        return self.alpha[-1]

    @property
    def K_array(self):
        return np.array(self.K, dtype=float)

    @property
    def r_array(self):
        return np.array(self.r, dtype=float)

    @property
    def q_array(self):
        return np.array(self.q, dtype=float)

    @property
    def decay_power(self):
        """d + 2 alpha, the algebraic decay exponent of the tails."""
        return self.dim + 2.0 * self.alpha_min

    def to_dict(self):
        return {
            "m": self.m,
            "alpha": list(self.alpha),
            "K": [list(row) for row in self.K],
            "r": list(self.r),
            "q": list(self.q),
            "delta": self.delta,
            "lambda_big": self.lambda_big,
            "dim": self.dim,
        }

    def model_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes):
        d = self.to_dict()
        d.pop("m")
        d.update(changes)
        return ModelSpec(**d)


def preset_model():
    """Two components, alpha = (1, 0.5), symmetric unit coupling, lambda_1 = 1."""
    return ModelSpec(
        alpha=(1.0, 0.5),
        K=((0.0, 1.0), (1.0, 0.0)),
        r=(0.0, 0.0),
        q=(1.0, 1.0),
        delta=1.0,
        lambda_big=2.0,
        dim=1,
    )


def _reaction(model, s):
    # s has shape (m, ...); no sign check, used on numerically perturbed states
    s = np.asarray(s, dtype=float)
    K = model.K_array
    r = model.r_array.reshape((-1,) + (1,) * (s.ndim - 1))
    q = model.q_array.reshape((-1,) + (1,) * (s.ndim - 1))
    lin = np.tensordot(K, s, axes=(1, 0))
    return lin + r * s - q * saturation(s, model.delta, model.lambda_big)


def eval_reaction(model, s):
    """Evaluate F at ``s`` (shape (m,) or (m, ...)); components must be >= 0."""
    s = np.asarray(s, dtype=float)
    if s.shape[0] != model.m:
        raise ValidationError(f"expected leading dimension {model.m}, got {s.shape}")
    if np.any(s < 0):
        raise DomainError("reaction term is only defined for nonnegative states")
    return _reaction(model, s)


def jacobian_at_zero(model):
    return model.K_array + np.diag(model.r_array)


def reaction_jacobian(model, s):
    """Analytic DF(s) for a single state vector."""
    s = np.asarray(s, dtype=float)
    slope = saturation_slope(s, model.delta, model.lambda_big)
    return model.K_array + np.diag(model.r_array - model.q_array * slope)


def fd_jacobian(model, s, h=1e-6):
    """Centered finite-difference Jacobian of F at ``s``."""
    s = np.asarray(s, dtype=float)
    m = model.m
    J = np.empty((m, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        J[:, j] = (_reaction(model, s + e) - _reaction(model, s - e)) / (2 * h)
    return J


def kpp_constants(model):
    """(c_delta1, c_delta2) bracketing DF(0)s - F(s) on the box."""
    q = model.q_array
    c1 = float(q.min())
    c2 = float(model.m ** ((1.0 + model.delta) / 2.0) * q.max())
    return c1, c2


def lipschitz_bound(model):
    """Sup over the box of the max absolute row sum of DF."""
    K = model.K_array
    r = model.r_array
    top = (1.0 + model.delta) * model.q_array * model.lambda_big**model.delta
    diag = np.maximum(np.abs(r), np.abs(r - top))
    return float(np.max(diag + K.sum(axis=1)))


@dataclass
class HypothesisReport:
    h1_lambda1: float
    h2_corner_values: np.ndarray
    h2_face_max: float
    h3_min_margin: float
    h4_min_margin: float
    lipschitz_estimate: float
    cooperativity_min: float
    c_delta1: float
    c_delta2: float
    passed: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.passed.values())

    def failures(self):
        return [k for k, v in self.passed.items() if not v]

    def rows(self):
        """(check, value, pass) rows for CSV output."""
        return [
            ("H1", self.h1_lambda1, self.passed["H1"]),
            ("H2_corner_max", float(np.max(self.h2_corner_values)), self.passed["H2"]),
            ("H2_face_max", self.h2_face_max, self.passed["H2"]),
            ("H3_min_margin", self.h3_min_margin, self.passed["H3"]),
            ("H4_min_margin", self.h4_min_margin, self.passed["H4"]),
            ("H5_lipschitz", self.lipschitz_estimate, self.passed["H5"]),
            ("cooperativity_min", self.cooperativity_min, self.passed["cooperative"]),
        ]


def validate_hypotheses(model, n_samples=1000, seed=0):
    """Sample the box and evaluate the KPP hypotheses.

    Never raises on a failed hypothesis: failures are recorded in
    ``passed`` so the caller can print diagnostics.
    """
    from fracspread.eigen import principal_eigenpair

    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    m, lam, delta = model.m, model.lambda_big, model.delta
    S = rng.uniform(0.0, lam, size=(n_samples, m))
    J0 = jacobian_at_zero(model)
    c1, c2 = kpp_constants(model)
    passed = {}

    try:
        lambda1 = principal_eigenpair(J0).lambda1
    except (NumericalError, ValidationError):
        lambda1 = float("nan")
    passed["H1"] = bool(lambda1 > 0)

    corner = eval_reaction(model, np.full(m, lam))
    # Invariance of the box only needs f_i <= 0 on the face s_i = Lambda.
    face_max = -np.inf
    for i in range(m):
        Si = S.copy()
        Si[:, i] = lam
        face_max = max(face_max, float(eval_reaction(model, Si.T)[i].max()))
    passed["H2"] = bool(np.all(corner <= 0) and face_max <= 0)

    F = eval_reaction(model, S.T)
    gap = J0 @ S.T - F
    norms = np.linalg.norm(S, axis=1)
    h3 = gap - c1 * S.T ** (1.0 + delta)
    h4 = c2 * norms[None, :] ** (1.0 + delta) - gap
    tol = 1e-12 * max(1.0, lam ** (1.0 + delta))
    h3_min, h4_min = float(h3.min()), float(h4.min())
    passed["H3"] = h3_min >= -tol
    passed["H4"] = h4_min >= -tol

    n_fd = min(n_samples, 100)
    interior = S[:n_fd] * (1 - 2e-6) + 1e-6 * lam
    lip = 0.0
    coop = np.inf
    off = ~np.eye(m, dtype=bool)
    for s in interior:
        J = fd_jacobian(model, s)
        lip = max(lip, float(np.abs(J).sum(axis=1).max()))
        if m > 1:
            coop = min(coop, float(J[off].min()))
    lip = max(lip, lipschitz_bound(model))
    passed["H5"] = bool(np.isfinite(lip))
    if m == 1:
        coop = float("inf")
    passed["cooperative"] = bool(coop > 0)

    return HypothesisReport(
        h1_lambda1=float(lambda1),
        h2_corner_values=corner,
        h2_face_max=face_max,
        h3_min_margin=h3_min,
        h4_min_margin=h4_min,
        lipschitz_estimate=lip,
        cooperativity_min=coop,
        c_delta1=c1,
        c_delta2=c2,
        passed=passed,
    )
