"""Time the compiled kernels against the pure-Python fallback.

Run from the repository root:  python3 benchmarks/bench_kernels.py

Both backends are loaded side by side (ignoring TPO_PURE_PYTHON), fed the
same randomized workloads, and cross-checked for bitwise agreement while
timing.  Typical output on a desktop shows the compiled path an order of
magnitude ahead on the admittance sweep and several times ahead on
kinematics.
"""

from __future__ import annotations

import time

import numpy as np

from tpo import _kernels_py as pure
from tpo.config import load_bundle

try:
    from tpo import _speedups as compiled
except ImportError:
    compiled = None


def _workload(seed: int = 99, configs: int = 2000):
    bundle = load_bundle()
    chain = bundle.robot.chain("right")
    prof = bundle.profile.admittance
    rng = np.random.default_rng(seed)
    qs = rng.uniform(-2.0, 2.0, (configs, chain.n))
    forces = rng.uniform(-10.0, 10.0, (configs, 3))
    return bundle, chain, prof, qs, forces


def bench_kinematics(impl, chain, qs):
    start = time.perf_counter()
    acc = 0.0
    for q in qs:
        p, jac, _ = impl.fk_jacobian(chain.axes, chain.offsets, chain.base_rot,
                                     chain.base_pos, q)
        acc += float(p[0]) + float(jac[0, 0])
    return time.perf_counter() - start, acc


def bench_admittance(impl, prof, qs, forces, ticks_per_config: int = 50):
    jac3 = np.eye(3, prof.n)
    start = time.perf_counter()
    acc = 0.0
    for q0, f in zip(qs[:200], forces[:200]):
        q_ref = q0.copy()
        qd = np.zeros_like(q0)
        jtf = impl.jt_force(jac3, f)
        for _ in range(ticks_per_config):
            q_ref, qd, _ = impl.admittance_advance(
                prof.m, prof.k, prof.d, prof.q_eq,
                q_ref, q_ref, qd, jtf, 0.01, 20,
            )
        acc += float(q_ref[0])
    return time.perf_counter() - start, acc


def main() -> int:
    bundle, chain, prof, qs, forces = _workload()
    print(f"robot chain: {chain.n} joints; admittance: {prof.n} joints")

    rows = []
    for name, impl in (("pure-python", pure), ("compiled", compiled)):
        if impl is None:
            print("compiled backend not built; run pip install -e . first")
            continue
        t_kin, chk_kin = bench_kinematics(impl, chain, qs)
        t_adm, chk_adm = bench_admittance(impl, prof, qs, forces)
        rows.append((name, t_kin, t_adm, chk_kin, chk_adm))
        print(f"{name:>12}: fk+jacobian x{len(qs)}: {t_kin * 1e3:8.1f} ms   "
              f"admittance 200x50 ticks: {t_adm * 1e3:8.1f} ms")

    if len(rows) == 2:
        _, pk, pa, ck1, ca1 = rows[0]
        _, ck, ca, ck2, ca2 = rows[1]
        agree = (ck1 == ck2) and (ca1 == ca2)
        print(f"    speedup: fk+jacobian x{pk / ck:.1f}, admittance x{pa / ca:.1f}, "
              f"checksums agree: {agree}")
        if not agree:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
