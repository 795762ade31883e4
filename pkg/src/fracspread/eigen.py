"""Perron eigenpair of DF(0) and derivative bounds for the reaction."""
from dataclasses import dataclass

import numpy as np

from fracspread.errors import ConsistencyError, ConvergenceError, DomainError
from fracspread.model import fd_jacobian, jacobian_at_zero, lipschitz_bound


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi1: np.ndarray  # positive, max component = 1
    iterations: int = 0


def principal_eigenpair(M, tol=1e-15, max_iter=200_000):
    """Power iteration on M + cI, c = 1 + max|M_ii|.

    The shift makes the iteration matrix entrywise positive, so the Perron
    root dominates every other eigenvalue in modulus.  Iteration stops when
    successive Rayleigh quotients and iterates both change by less than
    ``tol`` (relative).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("principal_eigenpair needs a square matrix")
    m = M.shape[0]
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    if m > 1 and np.any(M[~np.eye(m, dtype=bool)] <= 0):
        raise DomainError("off-diagonal entries must be strictly positive")
    if m == 1:
        return EigenPair(float(M[0, 0]), np.ones(1), 0)

    c = 1.0 + np.max(np.abs(np.diag(M)))
    S = M + c * np.eye(m)
    v = np.ones(m)
    rho_prev = np.inf
    for it in range(1, max_iter + 1):
        w = S @ v
        rho = float(v @ w) / float(v @ v)
        w /= w.max()
        dv = np.max(np.abs(w - v))
        v = w
        if abs(rho - rho_prev) <= tol * (1.0 + abs(rho)) and dv <= tol * 10:
            break
        rho_prev = rho
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
    # One final Rayleigh quotient on the converged vector.
    rho = float(v @ (S @ v)) / float(v @ v)
    if np.any(v <= 0):
        raise ConvergenceError("Perron vector lost positivity")
    return EigenPair(rho - c, v, it)


@dataclass(frozen=True)
class CouplingBounds:
    gamma: np.ndarray
    l: float

    @property
    def B_lin(self):
        m = self.gamma.shape[0]
        return np.full((m, m), self.l)

    @property
    def gamma_mm(self):
        return float(self.gamma[-1, -1])

    def step3_rates(self):
        """delta_i = max(gamma_ii, gamma_mm + 1) for the lower-bound induction."""
        g = np.diag(self.gamma)
        return np.maximum(g, self.gamma_mm + 1.0)


def coupling_bounds(model, n_samples=200, seed=0):
    """Analytic gamma and Lipschitz bound, cross-checked by finite differences."""
    m, lam, delta = model.m, model.lambda_big, model.delta
    K, r, q = model.K_array, model.r_array, model.q_array
    gamma = K.copy()
    top = (1.0 + delta) * q * lam**delta
    np.fill_diagonal(gamma, np.maximum(np.abs(r), np.abs(r - top)))
    l = lipschitz_bound(model)

    rng = np.random.default_rng(seed)
    # stay a step inside the box so centered differences do not straddle a kink
    h = 1e-6
    S = rng.uniform(h, lam - h, size=(n_samples, m))
    off = ~np.eye(m, dtype=bool)
    for s in S:
        J = fd_jacobian(model, s, h=h)
        if np.any(np.abs(np.diag(J)) > np.diag(gamma) + 1e-6):
            raise ConsistencyError(f"|d_i f_i| exceeds gamma_ii at s = {s}")
        if m > 1 and np.any(J[off] < gamma[off] - 1e-8):
            raise ConsistencyError(f"d_j f_i falls below gamma_ij at s = {s}")
        if np.abs(J).sum(axis=1).max() > l + 1e-6:
            raise ConsistencyError(f"row sum of |DF| exceeds l at s = {s}")
    return CouplingBounds(gamma=gamma, l=l)


def perron_of_model(model):
    return principal_eigenpair(jacobian_at_zero(model))
