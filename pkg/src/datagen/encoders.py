"""Payload encodings used by DNS tunneling clients, and QNAME assembly."""

import base64
from typing import List, Optional, Sequence, Tuple, Union

from src.domain import MAX_LABEL_LENGTH, split_apex

Apexes = Union[str, Sequence[str]]


def base32_lower(data: bytes) -> str:
    # Base32 is case-insensitive, hence the preferred DNS-safe alphabet
    return base64.b32encode(data).decode("ascii").rstrip("=").lower()


def hex_lower(data: bytes) -> str:
    return data.hex()


def base64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def base64_padded(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def chunk_labels(payload: str, size: int = MAX_LABEL_LENGTH) -> List[str]:
    return [payload[i:i + size] for i in range(0, len(payload), size)]


def pick_apex(apexes: Apexes, index: int) -> str:
    if isinstance(apexes, str):
        return apexes
    return apexes[index % len(apexes)]


def qname(labels: Sequence[str], apex: str) -> str:
    return ".".join(list(labels) + [apex])


def parse_tunnel_name(name: str, apexes: Apexes) -> Optional[Tuple[List[str], str]]:
    """Split a generated name back into its payload labels and apex."""
    for apex in [apexes] if isinstance(apexes, str) else apexes:
        head = split_apex(name, apex)
        if head:
            return head.split("."), apex
    return None
