"""Lexical emulators of the query names emitted by DNS tunneling tools.

Each sample is drawn from its own generator seeded by ``(seed, stream, index)``
so any single name can be regenerated without replaying the stream.
"""

from typing import Callable, Dict, List, Optional

import numpy as np

from src.datagen.encoders import (
    Apexes,
    base32_lower,
    base64_padded,
    base64url,
    chunk_labels,
    hex_lower,
    pick_apex,
    qname,
)
from src.domain import DomainSample, Label, Origin, Tool
from src.errors import UsageError

_STREAM_IODINE = 1
_STREAM_DNSCAT2 = 2
_STREAM_DNSEXFILTRATOR = 3
_STREAM_FAILED = {None: 4, "tuns": 5, "dns2tcp": 6}

IODINE_HEADER_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789"
FAILED_STYLES = ("tuns", "dns2tcp")


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, index])


def _payload(rng: np.random.Generator, low: int, high: int) -> bytes:
    return rng.bytes(int(rng.integers(low, high + 1)))


def _sample(name: str, tool: Tool) -> DomainSample:
    return DomainSample(name=name, label=Label.TUNNELING, tool=tool, origin=Origin.SYNTHETIC)


def _check_count(n: int) -> None:
    if n < 0:
        raise UsageError(f"sample count must be non-negative, got {n}")


def gen_iodine(n: int, apex: Apexes, seed: int) -> List[DomainSample]:
    """Header character followed by base32 upstream data (20-60 bytes)."""
    _check_count(n)
    samples = []
    for i in range(n):
        rng = _rng(seed, _STREAM_IODINE, i)
        header = IODINE_HEADER_CHARS[int(rng.integers(len(IODINE_HEADER_CHARS)))]
        encoded = header + base32_lower(_payload(rng, 20, 60))
        samples.append(_sample(qname(chunk_labels(encoded), pick_apex(apex, i)), Tool.IODINE))
    return samples


def gen_dnscat2(n: int, apex: Apexes, seed: int) -> List[DomainSample]:
    """Lower-case hex packets of 15-60 bytes cut into 63-character labels."""
    _check_count(n)
    samples = []
    for i in range(n):
        rng = _rng(seed, _STREAM_DNSCAT2, i)
        encoded = hex_lower(_payload(rng, 15, 60))
        samples.append(_sample(qname(chunk_labels(encoded), pick_apex(apex, i)), Tool.DNSCAT2))
    return samples


def gen_dnsexfiltrator(n: int, apex: Apexes, seed: int) -> List[DomainSample]:
    """Chunk index label, then base64url file data; case is preserved in the name."""
    _check_count(n)
    samples = []
    for i in range(n):
        rng = _rng(seed, _STREAM_DNSEXFILTRATOR, i)
        encoded = base64url(_payload(rng, 8, 40))
        labels = [str(i)] + chunk_labels(encoded)
        samples.append(_sample(qname(labels, pick_apex(apex, i)), Tool.DNSEXFILTRATOR))
    return samples


def _failed_label(rng: np.random.Generator, style: str) -> str:
    if style == "tuns":
        return base32_lower(_payload(rng, 3, 10))          # 5..16 chars
    return base64_padded(_payload(rng, 3, 12)).lower()     # 4..16 chars


def gen_failed_attempts(n: int, apex: Apexes, seed: int, style: Optional[str] = None) -> List[DomainSample]:
    """Short handshake queries from tunnels that never came up.

    ``style`` pins the tuns-like or dns2tcp-like encoding; by default the two alternate.
    """
    _check_count(n)
    if style is not None and style not in FAILED_STYLES:
        raise UsageError(f"unknown failed-attempt style {style!r}")
    samples = []
    for i in range(n):
        rng = _rng(seed, _STREAM_FAILED[style], i)
        current = style or FAILED_STYLES[i % 2]
        samples.append(_sample(qname([_failed_label(rng, current)], pick_apex(apex, i)),
                               Tool.NOT_SPECIFIED))
    return samples


Generator = Callable[[int, Apexes, int], List[DomainSample]]

GENERATORS: Dict[Tool, Generator] = {
    Tool.IODINE: gen_iodine,
    Tool.DNSCAT2: gen_dnscat2,
    Tool.DNSEXFILTRATOR: gen_dnsexfiltrator,
    Tool.NOT_SPECIFIED: gen_failed_attempts,
    Tool.TUNS: lambda n, apex, seed: gen_failed_attempts(n, apex, seed, style="tuns"),
    Tool.DNS2TCP: lambda n, apex, seed: gen_failed_attempts(n, apex, seed, style="dns2tcp"),
}
