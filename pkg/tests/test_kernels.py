"""Kernel correctness against independent oracles, plus backend parity."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import tpo._kernels_py as pure
from tpo import kernels

try:
    import tpo._speedups as compiled
except ImportError:
    compiled = None


def random_chain(rng, n):
    axes = rng.normal(size=(n, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    offsets = rng.normal(size=(n, 3)) * 0.3
    base_rot = Rotation.random(random_state=int(rng.integers(1 << 30))).as_matrix()
    base_pos = rng.normal(size=3) * 0.2
    q = rng.normal(size=n) * 2.0
    return axes, offsets, np.ascontiguousarray(base_rot), base_pos, q


def fk_oracle(axes, offsets, base_rot, base_pos, q):
    """Independent FK using scipy rotations instead of unrolled scalars."""
    r = Rotation.from_matrix(base_rot)
    p = np.array(base_pos, dtype=float)
    for axis, offset, qi in zip(axes, offsets, q):
        r = r * Rotation.from_rotvec(axis * qi)
        p = p + r.apply(offset)
    return p


def test_fk_matches_scipy_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        axes, offsets, base_rot, base_pos, q = random_chain(rng, n)
        got = kernels.fk_point(axes, offsets, base_rot, base_pos, q)
        want = fk_oracle(axes, offsets, base_rot, base_pos, q)
        assert np.allclose(got, want, atol=1e-12)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(2)
    h = 1e-6
    for _ in range(50):
        n = int(rng.integers(1, 8))
        axes, offsets, base_rot, base_pos, q = random_chain(rng, n)
        _, jac, _ = kernels.fk_jacobian(axes, offsets, base_rot, base_pos, q)
        for j in range(n):
            qp = q.copy(); qp[j] += h
            qm = q.copy(); qm[j] -= h
            col = (kernels.fk_point(axes, offsets, base_rot, base_pos, qp)
                   - kernels.fk_point(axes, offsets, base_rot, base_pos, qm)) / (2 * h)
            assert np.allclose(jac[:, j], col, atol=1e-6)


def test_fk_jacobian_joint_origins_prefix_fk():
    rng = np.random.default_rng(3)
    axes, offsets, base_rot, base_pos, q = random_chain(rng, 5)
    _, _, joints = kernels.fk_jacobian(axes, offsets, base_rot, base_pos, q)
    # origin of joint i is the FK of the truncated chain before link i
    for i in range(5):
        want = fk_oracle(axes[:i], offsets[:i], base_rot, base_pos, q[:i])
        assert np.allclose(joints[i], want, atol=1e-12)


def test_jt_force_is_matmul():
    rng = np.random.default_rng(4)
    jac = rng.normal(size=(3, 6))
    f = rng.normal(size=3)
    assert np.allclose(kernels.jt_force(jac, f), jac.T @ f, atol=1e-15)


def test_admittance_damped_integrator_tracks_closed_form():
    # 1-DOF, K=0: M qdd = -D qd + tau has qd(t) = (tau/D)(1 - e^(-D t / M))
    m = np.array([1.0]); k = np.array([0.0]); d = np.array([2.0])
    qe = np.zeros(1); q = np.zeros(1)
    qr = np.zeros(1); qd = np.zeros(1)
    tau = np.array([4.0])
    worst = 0.0
    for i in range(500):
        qr, qd, _ = kernels.admittance_advance(m, k, d, qe, q, qr, qd, tau, 0.01, 20)
        t = (i + 1) * 0.01
        worst = max(worst, abs(qd[0] - 2.0 * (1 - math.exp(-2.0 * t))))
    assert worst <= 3.7e-4  # frozen: measured 3.680e-4 for 20 substeps
    assert abs(qd[0] - 2.0) < 1e-3


def test_admittance_first_step_acceleration_uses_previous_velocity():
    m = np.ones(1); k = np.zeros(1); d = np.full(1, 2.0)
    qe = np.zeros(1); q = np.zeros(1); qr = np.zeros(1)
    _, _, qdd = kernels.admittance_advance(m, k, d, qe, q, qr, np.zeros(1),
                                           np.array([4.0]), 0.01, 20)
    assert qdd[0] == 4.0
    _, _, qdd = kernels.admittance_advance(m, k, d, qe, q, qr, np.array([0.5]),
                                           np.array([4.0]), 0.01, 20)
    assert qdd[0] == 3.0


def test_admittance_fixed_point_at_equilibrium():
    n = 4
    rng = np.random.default_rng(5)
    m = rng.uniform(0.5, 2, n); k = rng.uniform(1, 5, n); d = rng.uniform(1, 4, n)
    qe = rng.normal(size=n)
    qr, qd, qdd = kernels.admittance_advance(
        m, k, d, qe, qe.copy(), qe.copy(), np.zeros(n), np.zeros(n), 0.01, 20
    )
    assert np.array_equal(qr, qe)
    assert np.all(qd == 0.0) and np.all(qdd == 0.0)


@pytest.mark.skipif(compiled is None, reason="compiled backend not built")
def test_backends_are_bit_identical():
    """Replay determinism depends on this: not close, equal."""
    rng = np.random.default_rng(6)
    for _ in range(300):
        n = int(rng.integers(1, 8))
        axes, offsets, base_rot, base_pos, q = random_chain(rng, n)
        p1 = pure.fk_point(axes, offsets, base_rot, base_pos, q)
        p2 = compiled.fk_point(axes, offsets, base_rot, base_pos, q)
        assert np.array_equal(p1, p2)
        e1, J1, o1 = pure.fk_jacobian(axes, offsets, base_rot, base_pos, q)
        e2, J2, o2 = compiled.fk_jacobian(axes, offsets, base_rot, base_pos, q)
        assert np.array_equal(e1, e2)
        assert np.array_equal(J1, J2)
        assert np.array_equal(o1, o2)
        f = rng.normal(size=3) * 10
        t1 = pure.jt_force(J1, f)
        t2 = compiled.jt_force(J2, f)
        assert np.array_equal(t1, t2)
        m = rng.uniform(0.2, 2, n); k = rng.uniform(0, 5, n); d = rng.uniform(1, 6, n)
        qe = rng.normal(size=n); qr = rng.normal(size=n); qd = rng.normal(size=n)
        out1 = pure.admittance_advance(m, k, d, qe, q, qr, qd, t1, 0.01, 20)
        out2 = compiled.admittance_advance(m, k, d, qe, q, qr, qd, t2, 0.01, 20)
        for a, b in zip(out1, out2):
            assert np.array_equal(np.asarray(a), np.asarray(b))


def test_backend_selection_env_override(monkeypatch):
    import importlib
    import tpo.kernels as mod

    monkeypatch.setenv("TPO_PURE_PYTHON", "1")
    reloaded = importlib.reload(mod)
    try:
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("TPO_PURE_PYTHON")
        importlib.reload(mod)
