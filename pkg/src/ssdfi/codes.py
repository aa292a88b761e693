"""Erasure code correctability judge and cost model.

Stripes hold one chunk per device; a chunk holds `chunk_pages` symbols
(pages).  Faults degrade chunks three ways: the whole device is failed,
the chunk belongs to a bad block, or individual symbols are bad.

Correctability per stripe:
  * RAID5 tolerates one faulty chunk,
  * RAID6 tolerates two faulty chunks,
  * PMDS(1,1) tolerates two faulty chunks as long as at most one of
    them has more than one bad symbol.  Failed-device and bad-block
    chunks count as multi-symbol.

The cost model covers encode XOR counts, the effective replication
factor, and per-write update penalties for sector, row and full-stripe
update strategies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple


class ErasureCode(Enum):
    RAID5 = "RAID5"
    RAID6 = "RAID6"
    PMDS11 = "PMDS11"


class CodesError(ValueError):
    """Invalid stripe state or cost model arguments."""


@dataclass(frozen=True)
class ChunkFault:
    """Fault state of one chunk within a stripe."""

    device_failed: bool = False
    bad_block: bool = False
    bad_symbols: frozenset[int] = frozenset()

    def is_faulty(self) -> bool:
        return self.device_failed or self.bad_block or bool(self.bad_symbols)

    def is_multi_symbol(self) -> bool:
        # Whole-chunk faults lose every symbol in the chunk.
        return self.device_failed or self.bad_block or len(self.bad_symbols) > 1


@dataclass(frozen=True)
class StripeFaultState:
    """Sparse per-chunk fault map for one stripe."""

    n_devices: int
    chunk_pages: int
    chunks: dict[int, ChunkFault] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_devices < 3:
            raise CodesError("need at least 3 devices")
        if self.chunk_pages < 1:
            raise CodesError("chunk_pages must be >= 1")
        for idx, fault in self.chunks.items():
            if not 0 <= idx < self.n_devices:
                raise CodesError(f"chunk index {idx} outside device range")
            if any(not 0 <= s < self.chunk_pages for s in fault.bad_symbols):
                raise CodesError(f"bad symbol index outside chunk in chunk {idx}")


def faulty_chunk_count(state: StripeFaultState) -> int:
    return sum(1 for f in state.chunks.values() if f.is_faulty())


def multi_symbol_faulty_chunk_count(state: StripeFaultState) -> int:
    return sum(1 for f in state.chunks.values() if f.is_multi_symbol())


def uncorrectable(code: ErasureCode, faulty: int, multi: int) -> bool:
    """Correctability kernel on (faulty chunk, multi-symbol chunk) counts."""
    if code is ErasureCode.RAID5:
        return faulty > 1
    if code is ErasureCode.RAID6:
        return faulty > 2
    if code is ErasureCode.PMDS11:
        return faulty > 2 or multi > 1
    raise CodesError(f"unknown code {code!r}")


def check_stripe_dl(code: ErasureCode, state: StripeFaultState) -> bool:
    """True when the stripe's data is lost under the given code."""
    return uncorrectable(code, faulty_chunk_count(state), multi_symbol_faulty_chunk_count(state))


# ---------------------------------------------------------------------------
# Cost model


def _check_nr(n_devices: int, chunk_pages: int) -> None:
    if n_devices < 3:
        raise CodesError("need at least 3 devices")
    if chunk_pages < 1:
        raise CodesError("chunk_pages must be >= 1")


def encode_xor_count(code: ErasureCode, n_devices: int, chunk_pages: int) -> int:
    """XOR operations to encode one stripe."""
    _check_nr(n_devices, chunk_pages)
    n, r = n_devices, chunk_pages
    if code is ErasureCode.RAID5:
        return (n - 1) * r
    if code is ErasureCode.RAID6:
        return 2 * (n - 1) * r
    if code is ErasureCode.PMDS11:
        return 2 * (n - 1) * r + (r - 1)
    raise CodesError(f"unknown code {code!r}")


def erf(code: ErasureCode, n_devices: int, chunk_pages: int) -> float:
    """Effective replication factor: raw capacity over usable capacity."""
    _check_nr(n_devices, chunk_pages)
    n, r = n_devices, chunk_pages
    if code is ErasureCode.RAID5:
        return (n + 1) / n
    if code is ErasureCode.RAID6:
        return (n + 2) / n
    if code is ErasureCode.PMDS11:
        return (n + 1) * r / (n * r - 1)
    raise CodesError(f"unknown code {code!r}")


class UpdatePenalty(NamedTuple):
    writes: int
    reads: int


UPDATE_STRATEGIES = ("sector", "row", "stripe")


def update_penalty(
    code: ErasureCode, strategy: str, n_devices: int, chunk_pages: int
) -> UpdatePenalty:
    """Device writes and reads to update one sector under a strategy."""
    _check_nr(n_devices, chunk_pages)
    n, r = n_devices, chunk_pages
    table = {
        ("sector", ErasureCode.RAID5): (2, 2),
        ("sector", ErasureCode.RAID6): (3, 3),
        ("sector", ErasureCode.PMDS11): (4, 4),
        ("row", ErasureCode.RAID5): (n + 1, 0),
        ("row", ErasureCode.RAID6): (n + 2, 0),
        ("row", ErasureCode.PMDS11): (n + 3, n + 2),
        ("stripe", ErasureCode.RAID5): ((n + 1) * r, 0),
        ("stripe", ErasureCode.RAID6): ((n + 2) * r, 0),
        ("stripe", ErasureCode.PMDS11): ((n + 1) * r, 0),
    }
    try:
        w, rd = table[(strategy, code)]
    except KeyError:
        raise CodesError(f"unknown strategy {strategy!r} or code {code!r}") from None
    return UpdatePenalty(writes=w, reads=rd)


def brute_force_correctable(code: ErasureCode, state: StripeFaultState) -> bool:
    """Erasure-decoding argument, independent of the counting judge.

    RAID5 regenerates one erased chunk, RAID6 two.  PMDS(1,1) can
    regenerate one erased chunk row by row and has one extra global
    parity symbol, so a stripe decodes whenever some chunk choice leaves
    at most one erased symbol outside it.
    """
    erased = []
    for f in state.chunks.values():
        if f.device_failed or f.bad_block:
            erased.append(state.chunk_pages)
        elif f.bad_symbols:
            erased.append(len(f.bad_symbols))
    if code is ErasureCode.RAID5:
        return len(erased) <= 1
    if code is ErasureCode.RAID6:
        return len(erased) <= 2
    if code is ErasureCode.PMDS11:
        if not erased:
            return True
        return any(sum(erased) - e <= 1 for e in erased)
    raise CodesError(f"unknown code {code!r}")
