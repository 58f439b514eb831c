"""Polar encoder, successive-cancellation decoder and BER/FER simulation.

Bits map to channel inputs as 0 -> 0 and 1 -> A. Decoders take LLRs
``log p(y | 0) / p(y | 1)``, which for this mapping is ``-A (y - A/2) / sigma2``.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec
from .errors import DomainError
from .params import check_block_length

CSV_HEADER = ("snr_db", "frames", "bit_errors", "frame_errors", "ber", "fer")


@dataclass(frozen=True)
class PolarCode:
    """Block length, 1-based information set and optional provenance.

    Frozen bits are zero.
    """

    L: int
    info_set: tuple
    method: str = None
    snr_db: float = None

    def __post_init__(self):
        check_block_length(self.L)
        info = tuple(sorted(int(i) for i in self.info_set))
        if len(set(info)) != len(info):
            raise DomainError("info set has duplicate indices")
        if any(not 1 <= i <= self.L for i in info):
            raise DomainError(f"info set indices must lie in [1, {self.L}]")
        object.__setattr__(self, "info_set", info)

    @property
    def K(self):
        return len(self.info_set)

    @property
    def rate(self):
        return self.K / self.L

    @property
    def frozen_mask(self):
        mask = np.ones(self.L, dtype=bool)
        mask[np.array(self.info_set, dtype=int) - 1] = False
        return mask


def bit_reversal(L):
    """Permutation R_L as an index array."""
    l = check_block_length(L)
    return np.array([int(format(k, f"0{l}b")[::-1], 2) for k in range(L)])


def encode(u, L=None, bit_reverse=False):
    """x = u B_L over GF(2), natural order.

    Parameters
    ----------
    u : array_like of {0, 1}
        Shape ``(L,)`` or ``(frames, L)``.
    L : int, optional
        Expected block length, checked against ``u``.
    bit_reverse : bool
        Apply R_L to the output.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    if L is not None and n != L:
        raise DomainError(f"expected {L} bits, got {n}")
    check_block_length(n)
    h = 1
    while h < n:
        for s in range(0, n, 2 * h):
            x[..., s : s + h] ^= x[..., s + h : s + 2 * h]
        h *= 2
    if bit_reverse:
        x = x[..., bit_reversal(n)]
    return x


def _f(a, b):
    # exact check-node rule in a form that stays finite for +-inf inputs
    s = np.sign(a) * np.sign(b)
    m = np.minimum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore"):
        corr = np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return s * m + np.nan_to_num(corr, nan=0.0)


def _decode(llr, frozen):
    # returns (u_hat, x_hat) for a batch of LLR rows
    n = llr.shape[1]
    if n == 1:
        if frozen[0]:
            u = np.zeros((llr.shape[0], 1), dtype=np.uint8)
        else:
            u = (llr < 0).astype(np.uint8)
        return u, u.copy()
    h = n // 2
    la, lb = llr[:, :h], llr[:, h:]
    ua, xa = _decode(_f(la, lb), frozen[:h])
    ub, xb = _decode(lb + (1.0 - 2.0 * xa) * la, frozen[h:])
    return np.concatenate([ua, ub], axis=1), np.concatenate([xa ^ xb, xb], axis=1)


def sc_decode(llr, code):
    """Successive-cancellation decoding; ties at LLR 0 resolve to bit 0.

    Parameters
    ----------
    llr : array_like
        Shape ``(L,)`` or ``(frames, L)``; ``+-inf`` allowed.
    code : PolarCode

    Returns
    -------
    ndarray of uint8
        Decoded source bits, same leading shape as ``llr``.
    """
    llr = np.asarray(llr, dtype=float)
    single = llr.ndim == 1
    batch = llr[None, :] if single else llr
    if batch.shape[-1] != code.L:
        raise DomainError(f"expected {code.L} LLRs, got {batch.shape[-1]}")
    with np.errstate(invalid="ignore"):
        u, _ = _decode(batch, code.frozen_mask)
    return u[0] if single else u


def channel_llr(y, spec):
    return -spec.amplitude * (np.asarray(y) - spec.amplitude / 2.0) / spec.sigma2


@dataclass(frozen=True)
class BerRow:
    snr_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    bits: int = 0

    @property
    def ber(self):
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self):
        return self.frame_errors / self.frames if self.frames else 0.0


@dataclass(frozen=True)
class BerTable:
    rows: tuple

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([repr(float(r.snr_db)), r.frames, r.bit_errors, r.frame_errors, f"{r.ber:.6e}", f"{r.fer:.6e}"])
        return buf.getvalue()


def simulate(code, spec, snr_grid, frames, seed=0, chunk=20_000):
    """Monte Carlo BER/FER of ``code`` under SC decoding.

    Parameters
    ----------
    code : PolarCode
    spec : ChannelSpec
        Supplies amplitude and fit order; the noise level comes from each
        grid point.
    snr_grid : sequence of float
        SNRs in dB.
    frames : int
        Frames per grid point.
    seed : int
        Each grid point draws from its own child of this seed.
    """
    frames = int(frames)
    if frames < 1:
        raise DomainError("frames must be >= 1")
    grid = [float(s) for s in snr_grid]
    children = np.random.SeedSequence(seed).spawn(len(grid))
    info = np.array(code.info_set, dtype=int) - 1
    rows = []
    for snr, ss in zip(grid, children):
        pt = ChannelSpec.from_snr_db(snr, amplitude=spec.amplitude, poly_order=spec.poly_order)
        rng = np.random.default_rng(ss)
        bit_err = frame_err = done = 0
        while done < frames:
            m = min(chunk, frames - done)
            u = np.zeros((m, code.L), dtype=np.uint8)
            u[:, info] = rng.integers(0, 2, (m, info.size), dtype=np.uint8)
            y = pt.amplitude * encode(u) + rng.normal(0.0, pt.sigma, (m, code.L))
            u_hat = sc_decode(channel_llr(y, pt), code)
            wrong = u_hat[:, info] != u[:, info]
            bit_err += int(wrong.sum())
            frame_err += int(wrong.any(axis=1).sum())
            done += m
        rows.append(BerRow(snr, frames, bit_err, frame_err, bits=frames * code.K))
    return BerTable(tuple(rows))
