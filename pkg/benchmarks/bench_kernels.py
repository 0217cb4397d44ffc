"""Compare the compiled and pure-numpy kernel backends.

Times each kernel in isolation, then an end-to-end average run in a fresh
interpreter per backend (``ERGOLAB_PURE`` selects the fallback), and checks
that both backends produce the same bits.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import hashlib
import os
import subprocess
import sys
import timeit

import numpy as np

from ergolab._kernels import backend_module

END_TO_END = """
import hashlib, time
from ergolab import core, operators as op
from ergolab._kernels import BACKEND
from ergolab.angles import Angle
from ergolab.entangle import EntangledChain, cesaro_average
M, N = 64, 100000
R = op.rotation(Angle.sqrt2_minus_1(), M)
ch = EntangledChain([R, R], [op.mode_projector([1], M)])
t = time.perf_counter()
s = cesaro_average(ch, core.mode(1, M), N, [10, 1000, N])
dt = time.perf_counter() - t
print(BACKEND, dt, hashlib.sha256(s.full_csv().encode()).hexdigest())
"""


def _inputs(rng):
    d, rows = 129, 1024
    block = rng.standard_normal((rows, d))
    G = 4096
    perm = rng.permutation(G)
    cycles, seen = [], np.zeros(G, bool)
    for i in range(G):
        if not seen[i]:
            cyc, j = [], i
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = perm[j]
            cycles.append(cyc)
    members = np.concatenate([np.array(c, dtype=np.int64) for c in cycles])
    clen_c = np.array([len(c) for c in cycles], dtype=np.int64)
    start_c = np.concatenate([[0], np.cumsum(clen_c)[:-1]]).astype(np.int64)
    cstart = np.empty(G, np.int64)
    cpos = np.empty(G, np.int64)
    clen = np.empty(G, np.int64)
    for k, c in enumerate(cycles):
        for p, g in enumerate(c):
            cstart[g], cpos[g], clen[g] = start_c[k], p, clen_c[k]
    x = np.ascontiguousarray(rng.standard_normal((64, G)) + 1j * rng.standard_normal((64, G)))
    ns = np.arange(1, 65, dtype=np.int64) * 7919
    phase_ns = np.arange(1, 4097, dtype=np.int64) * 1000003
    ahi = rng.random(129)
    alo = ahi * 1e-17
    return block, (x, members, cstart, cpos, clen, ns), (phase_ns, ahi, alo)


def bench_kernels(repeat: int) -> list[tuple[str, str, float, str]]:
    rng = np.random.default_rng(0)
    block, gather, phase = _inputs(rng)
    ck = np.array([256, 1024], dtype=np.int64)
    rows = []
    for name in ("cython", "python"):
        try:
            mod = backend_module(name)
        except ImportError:
            print(f"{name}: not available", file=sys.stderr)
            continue

        def acc():
            s = np.zeros(block.shape[1])
            c = np.zeros(block.shape[1])
            out = np.zeros((2, block.shape[1]))
            mod.compensated_accumulate(block, s, c, 0, ck, 0, out)
            return out

        def gat():
            out = np.empty_like(gather[0])
            mod.permutation_gather(*gather, out)
            return out

        def pha():
            out = np.empty((phase[0].shape[0], phase[1].shape[0]))
            mod.dd_phase_fraction(*phase, out)
            return out

        for kname, fn in (("compensated_accumulate", acc), ("permutation_gather", gat), ("dd_phase_fraction", pha)):
            best = min(timeit.repeat(fn, number=1, repeat=repeat))
            digest = hashlib.sha256(fn().tobytes()).hexdigest()[:16]
            rows.append((kname, name, best, digest))
    return rows


def bench_end_to_end() -> list[tuple[str, float, str]]:
    out = []
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("ERGOLAB_PURE", None)
        if pure:
            env["ERGOLAB_PURE"] = "1"
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, dt, digest = res.stdout.split()
        out.append((backend, float(dt), digest))
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rows = bench_kernels(args.repeat)
    print(f"{'kernel':24s} {'backend':8s} {'best_s':>10s}  digest")
    for kname, backend, t, digest in rows:
        print(f"{kname:24s} {backend:8s} {t:10.5f}  {digest}")
    same = True
    for kname in {r[0] for r in rows}:
        digests = {r[3] for r in rows if r[0] == kname}
        same &= len(digests) == 1

    print("\nend-to-end: a=1 rotation chain, M=64, N=1e5")
    e2e = bench_end_to_end()
    for backend, dt, digest in e2e:
        print(f"  {backend:8s} {dt:8.3f} s  {digest[:16]}")
    same &= len({d for _, _, d in e2e}) == 1
    print("\nbackends bit-identical:", "yes" if same else "NO")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
