"""Batch metric kernels over packed bitset membership masks.

For each (position, value) pair the index stores a packed uint64 bitmask
over the reference population (bit i of word j = member j*64+i, little
endian).  A PS's observation set is the AND of its fixed cells' masks;
the masks of "PS minus one fixed cell" come from prefix/suffix AND
products, so atomicity costs O(fixed * words) per PS instead of
O(fixed^2 * words).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import STAR, EvaluatedPopulation

_DEBRUIJN = 0x03F79D71B4CB0A89


def _ctz_table() -> np.ndarray:
    table = np.zeros(64, dtype=np.int64)
    for k in range(64):
        table[((1 << k) * _DEBRUIJN) % (1 << 64) >> 58] = k
    return table


_CTZ = _ctz_table()


@njit(cache=True)
def _sum_bits(words, weights, raw, table):
    """Count set bits and sum weights/raw over them."""
    u1 = np.uint64(1)
    mul = np.uint64(_DEBRUIJN)
    sh = np.uint64(58)
    count = 0
    wsum = 0.0
    rawsum = 0.0
    for j in range(words.shape[0]):
        w = words[j]
        base = j * 64
        while w != np.uint64(0):
            lsb = w & (~w + u1)
            idx = base + table[(lsb * mul) >> sh]
            count += 1
            wsum += weights[idx]
            rawsum += raw[idx]
            w ^= lsb
    return count, wsum, rawsum


@njit(cache=True)
def _triples_kernel(
    batch,
    masks,
    sing_count,
    sing_wsum,
    sing_rawsum,
    weights,
    raw,
    raw_mean,
    table,
    out_simp,
    out_mean,
    out_atom,
):
    B, n = batch.shape
    W = masks.shape[2]
    u1 = np.uint64(1)
    mul = np.uint64(_DEBRUIJN)
    sh = np.uint64(58)
    full = ~np.uint64(0)
    prefix = np.empty((n + 1, W), dtype=np.uint64)
    suffix = np.empty((n + 1, W), dtype=np.uint64)
    pos_buf = np.empty(n, dtype=np.int64)
    val_buf = np.empty(n, dtype=np.int64)

    for b in range(B):
        f = 0
        for i in range(n):
            v = batch[b, i]
            if v != STAR:
                pos_buf[f] = i
                val_buf[f] = v
                f += 1
        out_simp[b] = n - f

        if f == 0:
            out_mean[b] = raw_mean
            out_atom[b] = 0.0
            continue

        if f == 1:
            c = sing_count[pos_buf[0], val_buf[0]]
            out_mean[b] = sing_rawsum[pos_buf[0], val_buf[0]] / c if c > 0 else -np.inf
            out_atom[b] = 0.0
            continue

        if f == 2:
            # excluding either cell leaves a single-cell PS: lookups suffice
            m0 = masks[pos_buf[0], val_buf[0]]
            m1 = masks[pos_buf[1], val_buf[1]]
            count = 0
            p_ab = 0.0
            rawsum = 0.0
            for j in range(W):
                w = m0[j] & m1[j]
                base = j * 64
                while w != np.uint64(0):
                    lsb = w & (~w + u1)
                    idx = base + table[(lsb * mul) >> sh]
                    count += 1
                    p_ab += weights[idx]
                    rawsum += raw[idx]
                    w ^= lsb
            out_mean[b] = rawsum / count if count > 0 else -np.inf
            s0 = sing_wsum[pos_buf[0], val_buf[0]]
            s1 = sing_wsum[pos_buf[1], val_buf[1]]
            atom = np.inf
            for k in range(2):
                p_as = s0 if k == 0 else s1
                p_sb = s1 if k == 0 else s0
                if p_ab <= 0.0 or p_as <= 0.0 or p_sb <= 0.0:
                    contrib = 0.0
                else:
                    contrib = p_ab * np.log(p_ab / (p_as * p_sb))
                if contrib < atom:
                    atom = contrib
            out_atom[b] = atom
            continue

        for j in range(W):
            prefix[0, j] = full
            suffix[f, j] = full
        for k in range(f):
            m = masks[pos_buf[k], val_buf[k]]
            for j in range(W):
                prefix[k + 1, j] = prefix[k, j] & m[j]
        for k in range(f - 1, -1, -1):
            m = masks[pos_buf[k], val_buf[k]]
            for j in range(W):
                suffix[k, j] = suffix[k + 1, j] & m[j]

        count, p_ab, rawsum = _sum_bits(prefix[f], weights, raw, table)
        out_mean[b] = rawsum / count if count > 0 else -np.inf

        atom = np.inf
        for k in range(f):
            p_sb = 0.0
            for j in range(W):
                w = prefix[k, j] & suffix[k + 1, j]
                base = j * 64
                while w != np.uint64(0):
                    lsb = w & (~w + u1)
                    idx = base + table[(lsb * mul) >> sh]
                    p_sb += weights[idx]
                    w ^= lsb
            p_as = sing_wsum[pos_buf[k], val_buf[k]]
            if p_ab <= 0.0 or p_as <= 0.0 or p_sb <= 0.0:
                contrib = 0.0
            else:
                contrib = p_ab * np.log(p_ab / (p_as * p_sb))
            if contrib < atom:
                atom = contrib
        out_atom[b] = atom


class PopulationIndex:
    """Packed masks and per-cell sums for one evaluated population."""

    def __init__(self, pop: EvaluatedPopulation):
        matrix = pop.matrix
        cards = pop.space.cardinalities
        P, n = matrix.shape
        W = (P + 63) // 64
        maxc = max(cards)
        masks = np.zeros((n, maxc, W), dtype=np.uint64)
        sing_count = np.zeros((n, maxc), dtype=np.int64)
        sing_wsum = np.zeros((n, maxc), dtype=np.float64)
        sing_rawsum = np.zeros((n, maxc), dtype=np.float64)
        for i in range(n):
            col = matrix[:, i]
            for v in range(cards[i]):
                bits = col == v
                packed = np.packbits(bits, bitorder="little")
                buf = np.zeros(W * 8, dtype=np.uint8)
                buf[: packed.shape[0]] = packed
                masks[i, v] = buf.view(np.uint64)
                sing_count[i, v] = int(bits.sum())
                sing_wsum[i, v] = float(pop.norm_fitness[bits].sum())
                sing_rawsum[i, v] = float(pop.raw_fitness[bits].sum())
        self.n = n
        self.masks = masks
        self.sing_count = sing_count
        self.sing_wsum = sing_wsum
        self.sing_rawsum = sing_rawsum
        self.weights = pop.norm_fitness
        self.raw = pop.raw_fitness
        self.raw_mean = float(pop.raw_fitness.mean())

    def triples(self, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(simplicity, mean_fitness, atomicity) per row of a uint8 PS batch."""
        batch = np.ascontiguousarray(batch, dtype=np.uint8)
        B = batch.shape[0]
        out_simp = np.empty(B, dtype=np.int64)
        out_mean = np.empty(B, dtype=np.float64)
        out_atom = np.empty(B, dtype=np.float64)
        if B:
            _triples_kernel(
                batch,
                self.masks,
                self.sing_count,
                self.sing_wsum,
                self.sing_rawsum,
                self.weights,
                self.raw,
                self.raw_mean,
                _CTZ,
                out_simp,
                out_mean,
                out_atom,
            )
        return out_simp, out_mean, out_atom
