"""Pure-Python kernels for the per-tick hot path.

tpo._speedups implements the same three routines in Cython.  The two
backends must stay bit-identical: every arithmetic expression here is
written in the exact order the compiled code evaluates it, scalars are C
doubles in both, and cos/sin go through the same libm.  Do not "simplify"
an expression in one backend only.
"""

from math import cos, sin

import numpy as np


def fk_point(axes, offsets, base_rot, base_pos, q):
    """Terminal point of a revolute chain, in the chain's reference frame.

    axes/offsets are (N,3) float64 arrays, base_rot (3,3), base_pos (3,),
    q length-N.  Joint i rotates about its local axis, then the link
    extends by its offset in the rotated frame.
    """
    p, _, _ = _fk(axes, offsets, base_rot, base_pos, q, want_jac=False)
    return np.array(p)


def fk_jacobian(axes, offsets, base_rot, base_pos, q):
    """Terminal point, 3xN position Jacobian, and per-joint origins."""
    p, jac, joints = _fk(axes, offsets, base_rot, base_pos, q, want_jac=True)
    return np.array(p), np.array(jac), np.array(joints)


def _fk(axes, offsets, base_rot, base_pos, q, want_jac):
    ax_l = axes.tolist()
    of_l = offsets.tolist()
    (r00, r01, r02), (r10, r11, r12), (r20, r21, r22) = base_rot.tolist()
    px, py, pz = base_pos.tolist()
    q_l = [float(v) for v in q]
    n = len(q_l)

    jx = [0.0] * n
    jy = [0.0] * n
    jz = [0.0] * n
    wx = [0.0] * n
    wy = [0.0] * n
    wz = [0.0] * n

    for i in range(n):
        ax, ay, az = ax_l[i]
        # world joint axis and joint origin, before rotating this joint
        wx[i] = r00 * ax + r01 * ay + r02 * az
        wy[i] = r10 * ax + r11 * ay + r12 * az
        wz[i] = r20 * ax + r21 * ay + r22 * az
        jx[i] = px
        jy[i] = py
        jz[i] = pz

        c = cos(q_l[i])
        s = sin(q_l[i])
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

        ox, oy, oz = of_l[i]
        px = px + (r00 * ox + r01 * oy + r02 * oz)
        py = py + (r10 * ox + r11 * oy + r12 * oz)
        pz = pz + (r20 * ox + r21 * oy + r22 * oz)

    if not want_jac:
        return (px, py, pz), None, None

    jac = [[0.0] * n for _ in range(3)]
    joints = [[0.0] * 3 for _ in range(n)]
    for i in range(n):
        dx = px - jx[i]
        dy = py - jy[i]
        dz = pz - jz[i]
        jac[0][i] = wy[i] * dz - wz[i] * dy
        jac[1][i] = wz[i] * dx - wx[i] * dz
        jac[2][i] = wx[i] * dy - wy[i] * dx
        joints[i][0] = jx[i]
        joints[i][1] = jy[i]
        joints[i][2] = jz[i]
    return (px, py, pz), jac, joints


def jt_force(jac, f):
    """J^T f for a 3xN Jacobian and a 3-vector force."""
    j0, j1, j2 = jac.tolist()
    f0, f1, f2 = float(f[0]), float(f[1]), float(f[2])
    n = len(j0)
    out = [0.0] * n
    for i in range(n):
        out[i] = j0[i] * f0 + j1[i] * f1 + j2[i] * f2
    return np.array(out)


def admittance_advance(m, k, d, q_eq, q, q_ref, qd_ref, jtf, dt, substeps):
    """Advance the joint mass-spring-damper reference by one control tick.

    Per sub-step: qdd = (K (q_eq - q) - D qd_prev + J^T f) / M, then
    qd += h qdd and q_ref += h qd (damping always on the sub-step's
    previous velocity).  The measured q is held for the whole tick.
    Returns (q_ref', qd_ref', qdd_first) where qdd_first is the
    acceleration computed from the state at the start of the tick.
    """
    m_l = m.tolist()
    k_l = k.tolist()
    d_l = d.tolist()
    qe_l = q_eq.tolist()
    q_l = q.tolist()
    qr = q_ref.tolist()
    qd = qd_ref.tolist()
    jt = jtf.tolist()
    n = len(q_l)
    h = dt / substeps
    qdd0 = [0.0] * n
    for s in range(substeps):
        for i in range(n):
            a = (k_l[i] * (qe_l[i] - q_l[i]) - d_l[i] * qd[i] + jt[i]) / m_l[i]
            if s == 0:
                qdd0[i] = a
            qd[i] = qd[i] + h * a
            qr[i] = qr[i] + h * qd[i]
    return np.array(qr), np.array(qd), np.array(qdd0)
