# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-tick hot path.

Mirror of tpo._kernels_py, expression for expression; the build passes
-ffp-contract=off so both backends produce bit-identical doubles.

cos/sin go through noinline wrappers: with plain calls GCC fuses the
pair into glibc sincos, whose cos result can differ from cos() by one
ulp, which would break cross-backend log replay.
"""

cdef extern from *:
    """
    #include <math.h>
    static double __attribute__((noinline)) tpo_scalar_cos(double x)
    { return cos(x); }
    static double __attribute__((noinline)) tpo_scalar_sin(double x)
    { return sin(x); }
    """
    double tpo_scalar_cos(double x) nogil
    double tpo_scalar_sin(double x) nogil

import numpy as np


def fk_point(axes, offsets, base_rot, base_pos, q):
    p, _, _ = _fk(axes, offsets, base_rot, base_pos, q, 0)
    return p


def fk_jacobian(axes, offsets, base_rot, base_pos, q):
    return _fk(axes, offsets, base_rot, base_pos, q, 1)


cdef _fk(object axes_o, object offsets_o, object base_rot_o, object base_pos_o,
         object q_o, int want_jac):
    cdef double[:, ::1] axes = np.ascontiguousarray(axes_o, dtype=np.float64)
    cdef double[:, ::1] offsets = np.ascontiguousarray(offsets_o, dtype=np.float64)
    cdef double[:, ::1] base_rot = np.ascontiguousarray(base_rot_o, dtype=np.float64)
    cdef double[::1] base_pos = np.ascontiguousarray(base_pos_o, dtype=np.float64)
    cdef double[::1] q = np.ascontiguousarray(q_o, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i

    cdef double r00 = base_rot[0, 0], r01 = base_rot[0, 1], r02 = base_rot[0, 2]
    cdef double r10 = base_rot[1, 0], r11 = base_rot[1, 1], r12 = base_rot[1, 2]
    cdef double r20 = base_rot[2, 0], r21 = base_rot[2, 1], r22 = base_rot[2, 2]
    cdef double px = base_pos[0], py = base_pos[1], pz = base_pos[2]

    jx_a = np.empty(n, dtype=np.float64)
    jy_a = np.empty(n, dtype=np.float64)
    jz_a = np.empty(n, dtype=np.float64)
    wx_a = np.empty(n, dtype=np.float64)
    wy_a = np.empty(n, dtype=np.float64)
    wz_a = np.empty(n, dtype=np.float64)
    cdef double[::1] jx = jx_a, jy = jy_a, jz = jz_a
    cdef double[::1] wx = wx_a, wy = wy_a, wz = wz_a

    cdef double ax, ay, az, c, s, cc
    cdef double m00, m01, m02, m10, m11, m12, m20, m21, m22
    cdef double n00, n01, n02, n10, n11, n12, n20, n21, n22
    cdef double ox, oy, oz

    for i in range(n):
        ax = axes[i, 0]
        ay = axes[i, 1]
        az = axes[i, 2]
        wx[i] = r00 * ax + r01 * ay + r02 * az
        wy[i] = r10 * ax + r11 * ay + r12 * az
        wz[i] = r20 * ax + r21 * ay + r22 * az
        jx[i] = px
        jy[i] = py
        jz[i] = pz

        c = tpo_scalar_cos(q[i])
        s = tpo_scalar_sin(q[i])
        cc = 1.0 - c
        m00 = c + ax * ax * cc
        m01 = ax * ay * cc - az * s
        m02 = ax * az * cc + ay * s
        m10 = ay * ax * cc + az * s
        m11 = c + ay * ay * cc
        m12 = ay * az * cc - ax * s
        m20 = az * ax * cc - ay * s
        m21 = az * ay * cc + ax * s
        m22 = c + az * az * cc

        n00 = r00 * m00 + r01 * m10 + r02 * m20
        n01 = r00 * m01 + r01 * m11 + r02 * m21
        n02 = r00 * m02 + r01 * m12 + r02 * m22
        n10 = r10 * m00 + r11 * m10 + r12 * m20
        n11 = r10 * m01 + r11 * m11 + r12 * m21
        n12 = r10 * m02 + r11 * m12 + r12 * m22
        n20 = r20 * m00 + r21 * m10 + r22 * m20
        n21 = r20 * m01 + r21 * m11 + r22 * m21
        n22 = r20 * m02 + r21 * m12 + r22 * m22
        r00, r01, r02 = n00, n01, n02
        r10, r11, r12 = n10, n11, n12
        r20, r21, r22 = n20, n21, n22

        ox = offsets[i, 0]
        oy = offsets[i, 1]
        oz = offsets[i, 2]
        px = px + (r00 * ox + r01 * oy + r02 * oz)
        py = py + (r10 * ox + r11 * oy + r12 * oz)
        pz = pz + (r20 * ox + r21 * oy + r22 * oz)

    p_a = np.array((px, py, pz))
    if not want_jac:
        return p_a, None, None

    jac_a = np.empty((3, n), dtype=np.float64)
    joints_a = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] jac = jac_a
    cdef double[:, ::1] joints = joints_a
    cdef double dx, dy, dz
    for i in range(n):
        dx = px - jx[i]
        dy = py - jy[i]
        dz = pz - jz[i]
        jac[0, i] = wy[i] * dz - wz[i] * dy
        jac[1, i] = wz[i] * dx - wx[i] * dz
        jac[2, i] = wx[i] * dy - wy[i] * dx
        joints[i, 0] = jx[i]
        joints[i, 1] = jy[i]
        joints[i, 2] = jz[i]
    return p_a, jac_a, joints_a


def jt_force(jac, f):
    cdef double[:, ::1] j = np.ascontiguousarray(jac, dtype=np.float64)
    cdef double f0 = f[0], f1 = f[1], f2 = f[2]
    cdef Py_ssize_t n = j.shape[1]
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = j[0, i] * f0 + j[1, i] * f1 + j[2, i] * f2
    return out_a


def admittance_advance(m, k, d, q_eq, q, q_ref, qd_ref, jtf, double dt, int substeps):
    cdef double[::1] m_v = np.ascontiguousarray(m, dtype=np.float64)
    cdef double[::1] k_v = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[::1] d_v = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[::1] qe_v = np.ascontiguousarray(q_eq, dtype=np.float64)
    cdef double[::1] q_v = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] jt_v = np.ascontiguousarray(jtf, dtype=np.float64)
    cdef Py_ssize_t n = q_v.shape[0]

    qr_a = np.array(q_ref, dtype=np.float64, copy=True)
    qd_a = np.array(qd_ref, dtype=np.float64, copy=True)
    qdd0_a = np.zeros(n, dtype=np.float64)
    cdef double[::1] qr = qr_a
    cdef double[::1] qd = qd_a
    cdef double[::1] qdd0 = qdd0_a

    cdef double h = dt / substeps
    cdef double a
    cdef Py_ssize_t s, i
    for s in range(substeps):
        for i in range(n):
            a = (k_v[i] * (qe_v[i] - q_v[i]) - d_v[i] * qd[i] + jt_v[i]) / m_v[i]
            if s == 0:
                qdd0[i] = a
            qd[i] = qd[i] + h * a
            qr[i] = qr[i] + h * qd[i]
    return qr_a, qd_a, qdd0_a
