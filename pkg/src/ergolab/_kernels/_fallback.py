"""Pure-numpy versions of the compiled kernels.

Operation order matches ``_ckernels.pyx`` exactly; keep the two in step.
"""
import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def compensated_accumulate(block, s, c, start, checkpoints, ck_pos, out):
    nck = checkpoints.shape[0]
    for i in range(block.shape[0]):
        n = start + i + 1
        x = block[i]
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s[:] = t
        if ck_pos < nck and checkpoints[ck_pos] == n:
            out[ck_pos] = (s + c) / float(n)
            ck_pos += 1
    return ck_pos


def permutation_gather(x, members, cstart, cpos, clen, ns, out):
    idx = members[cstart[None, :] + (cpos[None, :] + ns[:, None]) % clen[None, :]]
    out[...] = np.take_along_axis(x, idx, axis=1)


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dd_phase_fraction(ns, ahi, alo, out):
    nd = ns.astype(np.float64)[:, None]
    p, e = _two_prod(nd, ahi[None, :])
    r = (p - np.floor(p)) + (e + nd * alo[None, :])
    out[...] = r - np.floor(r)
