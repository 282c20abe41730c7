"""Pure-Python versions of the bit-row kernels.

Same signatures as the compiled module.  Rows are handled as Python ints
while a pass runs and written back into the numpy arrays at the end.
"""

from __future__ import annotations

import numpy as np


def _to_ints(rows: np.ndarray) -> list[int]:
    raw = np.ascontiguousarray(rows).tobytes()
    step = rows.shape[1] * 8
    return [int.from_bytes(raw[i : i + step], "little") for i in range(0, len(raw), step)]


def _store(rows: np.ndarray, values: list[int], start: int = 0) -> None:
    nw = rows.shape[1]
    for r, v in enumerate(values, start):
        rows[r] = np.frombuffer(v.to_bytes(nw * 8, "little"), dtype=np.uint64)


def _adj(ptr: np.ndarray, idx: np.ndarray) -> list[list[int]]:
    p = ptr.tolist()
    i = idx.tolist()
    return [i[p[r] : p[r + 1]] for r in range(len(p) - 1)]


def pass1_post(post, succ_ptr, succ_idx) -> None:
    n = post.shape[0]
    succs = _adj(succ_ptr, succ_idx)
    rows = [0] * n
    for r in range(n - 1, -1, -1):
        v = 1 << r
        for s in succs[r]:
            v |= rows[s]
        rows[r] = v
    _store(post, rows)


def pass2_conf(conf, post, pred_ptr, pred_idx, comp_ptr, comp_idx) -> None:
    n = conf.shape[0]
    preds = _adj(pred_ptr, pred_idx)
    comps = _adj(comp_ptr, comp_idx)
    p = _to_ints(post)
    rows = [0] * n
    for r in range(n):
        v = 0
        for s in preds[r]:
            v |= rows[s]
        for s in comps[r]:
            v |= p[s]
        rows[r] = v
    _store(conf, rows)


def pass3_rev(rev, conf, pred_ptr, pred_idx, lo, hi, start: int, stop: int) -> int:
    n = rev.shape[0]
    full = (1 << n) - 1
    preds = _adj(pred_ptr, pred_idx)
    c = _to_ints(conf)
    done = _to_ints(rev)
    checks = 0
    for r in range(start, stop):
        v = 1 << r
        for s in preds[r]:
            v |= done[s]
        mine = c[r]
        cand = full & ~(v | mine)
        while cand:
            low = cand & -cand
            q = low.bit_length() - 1
            cand ^= low
            checks += 1
            if not c[q] & ~mine:
                v |= low
        done[r] = v
    _store(rev[start:stop], done[start:stop])
    return checks


def pass3_rev_listing(rev, conf, pred_ptr, pred_idx) -> int:
    n = rev.shape[0]
    full = (1 << n) - 1
    preds = _adj(pred_ptr, pred_idx)
    c = _to_ints(conf)
    rows = [1 << r for r in range(n)]
    checks = 0
    for r in range(n):
        v = rows[r]
        for s in preds[r]:
            v |= rows[s]
        cand = full & ~(v | c[r])
        while cand:
            low = cand & -cand
            q = low.bit_length() - 1
            cand ^= low
            checks += 1
            if not rows[q] & ~v:
                v |= low
        rows[r] = v
    _store(rev, rows)
    return checks
