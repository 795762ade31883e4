import numpy as np
import pytest

from fracspread.eigen import coupling_bounds, perron_of_model, principal_eigenpair
from fracspread.errors import DomainError
from fracspread.model import ModelSpec


def _dense_oracle(M):
    w, V = np.linalg.eig(M)
    k = int(np.argmax(w.real))
    v = np.abs(V[:, k].real)
    return float(w[k].real), v / v.max()


def random_metzler(rng, m):
    M = rng.uniform(0.1, 2.0, size=(m, m))
    np.fill_diagonal(M, rng.uniform(-3.0, 3.0, size=m))
    return M


def test_symmetric_circulant():
    e = principal_eigenpair(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert e.lambda1 == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(e.phi1, [1.0, 1.0], atol=1e-14)


def test_nonsymmetric_example():
    # characteristic polynomial l^2 + l - 2: Perron root 1, vector (1, 1)
    e = principal_eigenpair(np.array([[-1.0, 2.0], [1.0, 0.0]]))
    assert e.lambda1 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(e.phi1, [1.0, 1.0], atol=1e-12)


def test_matches_dense_solver(rng):
    for m in (2, 3, 5):
        M = random_metzler(rng, m)
        e = principal_eigenpair(M)
        lam, v = _dense_oracle(M)
        assert abs(e.lambda1 - lam) <= 1e-10 * (1 + abs(lam))
        np.testing.assert_allclose(e.phi1, v, atol=1e-8)
        assert np.max(np.abs(M @ e.phi1 - e.lambda1 * e.phi1)) <= 1e-10 * (1 + abs(e.lambda1))
        assert np.all(e.phi1 > 0) and e.phi1.max() == 1.0


@pytest.mark.parametrize("c", [0.5, 3.0, 17.0])
def test_scale_and_shift_equivariance(rng, c):
    M = random_metzler(rng, 4)
    e = principal_eigenpair(M)
    es = principal_eigenpair(c * M)
    assert es.lambda1 == pytest.approx(c * e.lambda1, rel=1e-10, abs=1e-10)
    np.testing.assert_allclose(es.phi1, e.phi1, atol=1e-9)
    eh = principal_eigenpair(M + c * np.eye(4))
    assert eh.lambda1 == pytest.approx(e.lambda1 + c, abs=1e-10)
    np.testing.assert_allclose(eh.phi1, e.phi1, atol=1e-9)


def test_rejects_nonpositive_offdiagonal():
    with pytest.raises(DomainError):
        principal_eigenpair(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(DomainError):
        principal_eigenpair(np.ones((2, 3)))


def test_scalar_case():
    e = principal_eigenpair(np.array([[2.5]]))
    assert e.lambda1 == 2.5 and np.array_equal(e.phi1, [1.0])


def test_coupling_bounds_preset(preset):
    cb = coupling_bounds(preset)
    # gamma_ii = max(|r|, |r - (1+delta) q Lambda^delta|) = |0 - 2*1*2| = 4
    np.testing.assert_array_equal(cb.gamma, [[4.0, 1.0], [1.0, 4.0]])
    assert cb.l == 5.0
    assert cb.gamma_mm == 4.0
    np.testing.assert_array_equal(cb.B_lin, np.full((2, 2), 5.0))
    np.testing.assert_array_equal(cb.step3_rates(), [5.0, 5.0])


def test_coupling_bounds_scalar():
    m = ModelSpec(alpha=(0.5,), K=((0.0,),), r=(1.0,), q=(1.0,), delta=1.0, lambda_big=2.0)
    assert coupling_bounds(m).gamma[0, 0] == 3.0


def test_offdiagonal_gamma_is_K(rng):
    K = rng.uniform(0.2, 1.0, size=(3, 3))
    np.fill_diagonal(K, 0.0)
    m = ModelSpec(alpha=(1.0, 0.8, 0.6), K=K, r=(0.1, 0.0, -0.2), q=(1.0, 2.0, 1.5), delta=1.0, lambda_big=3.0)
    cb = coupling_bounds(m, n_samples=100, seed=3)
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(cb.gamma[off], K[off])


def test_perron_of_preset(preset):
    e = perron_of_model(preset)
    assert e.lambda1 == pytest.approx(1.0, abs=1e-13)
