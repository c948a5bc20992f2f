import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdeepcluster.errors import BadLabels, DimensionMismatch, SingularSystem
from qdeepcluster.lssvm import (
    BinarySVMModel,
    KernelSpec,
    assemble_system,
    build_kernel_matrix,
    check_conditioning,
    decision_value,
    solve_classical,
    train_classical,
)


def primal_linear_lssvm(X, y, eta):
    """Independent route: ridge-type least squares in (w, b) for the linear kernel.

    min 1/2 |w|^2 + eta/2 sum (y_i - w.x_i - b)^2; then alpha_i = eta * e_i.
    """
    m, n = X.shape
    A = np.hstack([X, np.ones((m, 1))])
    reg = np.eye(n + 1) / eta
    reg[n, n] = 0.0
    wb = np.linalg.solve(A.T @ A + reg, A.T @ y)
    e = y - A @ wb
    return wb[n], eta * e


def test_kernel_examples():
    e = np.eye(2)
    assert np.array_equal(build_kernel_matrix(e, KernelSpec()), np.eye(2))
    rng = np.random.default_rng(0)
    k = build_kernel_matrix(rng.normal(size=(6, 3)), KernelSpec.rbf(0.7))
    assert np.allclose(np.diag(k), 1.0)
    assert np.array_equal(build_kernel_matrix([[1.0], [2.0]], KernelSpec()), [[1, 2], [2, 4]])


def test_kernel_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        KernelSpec()(np.ones((2, 3)), np.ones((2, 4)))


@pytest.mark.parametrize("kernel", [KernelSpec(), KernelSpec.rbf(0.3), KernelSpec.polynomial(3, 0.5)])
def test_kernel_symmetry_and_psd(kernel):
    rng = np.random.default_rng(1)
    for _ in range(20):
        k = build_kernel_matrix(rng.normal(size=(8, 4)), kernel)
        assert np.max(np.abs(k - k.T)) <= 1e-12
        if kernel.kind == "rbf":
            assert np.linalg.eigvalsh(k).min() >= -1e-9


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec.rbf(0.0)
    with pytest.raises(ValueError):
        KernelSpec.polynomial(0)
    with pytest.raises(ValueError):
        KernelSpec.from_dict({"kind": "rbf", "gama": 1.0})
    k = KernelSpec.polynomial(3, 0.25)
    assert KernelSpec.from_dict(k.to_dict()) == k


def test_assemble_examples():
    s = assemble_system(np.array([[1.0]]), [1], 1.0)
    assert np.array_equal(s.F, [[0, 1], [1, 2]])
    s = assemble_system(np.eye(2), [1, -1], 2.0)
    assert s.trF == 3.0
    assert np.array_equal(s.F, s.F.T)
    assert s.F[0, 0] == 0 and np.all(s.F[0, 1:] == 1) and np.all(s.F[1:, 0] == 1)


def test_assemble_bad_labels():
    with pytest.raises(BadLabels):
        assemble_system(np.eye(2), [1, 0], 1.0)


def test_solve_example_2x2():
    s = assemble_system(np.array([[1.0]]), [1], 1.0)
    m = solve_classical(s)
    assert m.b == pytest.approx(1.0, abs=1e-15)
    assert m.alpha[0] == pytest.approx(0.0, abs=1e-15)


def test_mirror_symmetric_points():
    X = np.array([[1.0, 0.5], [-1.0, -0.5]])
    m = train_classical(X, [1, -1], KernelSpec(), 1.0)
    assert m.alpha[0] == pytest.approx(-m.alpha[1], abs=1e-12)
    assert m.b == pytest.approx(0.0, abs=1e-12)


def test_singular_system():
    with pytest.raises(SingularSystem):
        check_conditioning(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_residual_and_stationarity():
    rng = np.random.default_rng(2)
    for kernel in (KernelSpec(), KernelSpec.rbf(0.5), KernelSpec.polynomial(2)):
        for _ in range(20):
            m, n = int(rng.integers(2, 12)), int(rng.integers(1, 5))
            X = rng.normal(size=(m, n))
            y = rng.choice([-1.0, 1.0], size=m)
            eta = float(rng.uniform(0.2, 5))
            s = assemble_system(build_kernel_matrix(X, kernel), y, eta)
            model = solve_classical(s, X, kernel)
            sol = np.concatenate([[model.b], model.alpha])
            assert np.linalg.norm(s.F @ sol - s.rhs) <= 1e-8
            resid = y - decision_value(model, X)
            assert np.allclose(resid, model.alpha / eta, atol=1e-6)


def test_matches_primal_oracle():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m, n = int(rng.integers(2, 15)), int(rng.integers(1, 6))
        X = rng.normal(size=(m, n))
        y = rng.choice([-1.0, 1.0], size=m)
        eta = float(rng.uniform(0.1, 10))
        model = train_classical(X, y, KernelSpec(), eta)
        b, alpha = primal_linear_lssvm(X, y, eta)
        assert model.b == pytest.approx(b, abs=1e-8)
        assert np.allclose(model.alpha, alpha, atol=1e-8)


def test_decision_examples():
    m = BinarySVMModel(b=0.3, alpha=np.zeros(2), support=np.eye(2), labels=np.ones(2), kernel=KernelSpec())
    assert decision_value(m, [5.0, -1.0]) == 0.3
    m = BinarySVMModel(b=0.0, alpha=np.array([1.0]), support=np.array([[0.7, 0.0]]),
                       labels=np.ones(1), kernel=KernelSpec())
    assert decision_value(m, [1.0, 3.0]) == pytest.approx(0.7)
    with pytest.raises(DimensionMismatch):
        decision_value(m, [1.0, 2.0, 3.0])


def test_separable_four_points():
    X = np.array([[2.0, 2.0], [3.0, 1.5], [-2.0, -1.0], [-1.5, -3.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    m = train_classical(X, y, KernelSpec(), 1.0)
    assert np.all(np.sign(decision_value(m, X)) == y)


@given(st.integers(0, 2 ** 32 - 1))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    X = rng.normal(size=(m, 3))
    y = rng.choice([-1.0, 1.0], size=m)
    perm = rng.permutation(m)
    a = train_classical(X, y, KernelSpec.rbf(0.4), 1.5)
    b = train_classical(X[perm], y[perm], KernelSpec.rbf(0.4), 1.5)
    assert np.allclose(a.alpha[perm], b.alpha, atol=1e-9)
    assert a.b == pytest.approx(b.b, abs=1e-9)
