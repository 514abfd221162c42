"""Query-name extraction from resolver logs (plain lists, dnsmasq, BIND querylog)."""

import io
import re
import sys
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Union

from pydantic import BaseModel, Field

from src.config import logger
from src.domain import is_qname, normalize_name, split_apex
from src.errors import UsageError

DNSMASQ_QUERY_RE = re.compile(r"query\[(?P<qtype>[^\]]+)\]\s+(?P<qname>\S+)\s+from\s+(?P<client>\S+)")
BIND_QUERY_RE = re.compile(r"query:\s+(?P<qname>\S+)\s+IN\s")
ISO_STAMP_RE = re.compile(r"^(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?)")
BIND_STAMP_RE = re.compile(r"^(\d{2}-[A-Za-z]{3}-\d{4} \d{2}:\d{2}:\d{2}(?:\.\d+)?)")


class LogFormat(str, Enum):
    PLAIN = "plain"
    DNSMASQ = "dnsmasq"
    BIND = "bind"


class LogRecord(BaseModel):
    qname: str
    timestamp: Optional[float] = Field(None, description="Epoch seconds, when the line carries a full date")
    source_line: int


class ParseResult(BaseModel):
    records: List[LogRecord]
    skipped: int

    @property
    def line_count(self) -> int:
        return len(self.records) + self.skipped


def _as_format(fmt: Union[str, LogFormat]) -> LogFormat:
    try:
        return LogFormat(fmt)
    except ValueError:
        raise UsageError(f"unsupported log format {fmt!r}; choose from "
                         f"{', '.join(f.value for f in LogFormat)}") from None


def _iso_timestamp(line: str) -> Optional[float]:
    match = ISO_STAMP_RE.match(line)
    if not match:
        return None
    text = match.group(1).replace("Z", "+00:00")
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        return None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def _bind_timestamp(line: str) -> Optional[float]:
    match = BIND_STAMP_RE.match(line)
    if not match:
        return None
    text = match.group(1)
    pattern = "%d-%b-%Y %H:%M:%S.%f" if "." in text else "%d-%b-%Y %H:%M:%S"
    try:
        return datetime.strptime(text, pattern).replace(tzinfo=timezone.utc).timestamp()
    except ValueError:
        return None


def parse_line(fmt: Union[str, LogFormat], line: Union[str, bytes],
               source_line: int = 0) -> Optional[LogRecord]:
    """One record, or None when the line carries no usable query name."""
    fmt = _as_format(fmt)
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    text = line.strip()
    if not text or text.startswith("#"):
        return None

    timestamp = None
    if fmt is LogFormat.PLAIN:
        raw = text
    elif fmt is LogFormat.DNSMASQ:
        match = DNSMASQ_QUERY_RE.search(text)
        if not match:
            return None
        raw = match.group("qname")
        # syslog "Jan  1 00:00:00" prefixes carry no year and are left out
        timestamp = _iso_timestamp(text)
    else:
        match = BIND_QUERY_RE.search(text)
        if not match:
            return None
        raw = match.group("qname")
        timestamp = _bind_timestamp(text)

    name = normalize_name(raw)
    if not is_qname(name):
        return None
    return LogRecord(qname=name, timestamp=timestamp, source_line=source_line)


def parse_lines(fmt: Union[str, LogFormat], lines: Iterable[Union[str, bytes]]) -> ParseResult:
    fmt = _as_format(fmt)
    records: List[LogRecord] = []
    skipped = 0
    for lineno, line in enumerate(lines, start=1):
        record = parse_line(fmt, line, lineno)
        if record is None:
            skipped += 1
        else:
            records.append(record)
    if skipped:
        logger.info(f"{fmt.value} log: {len(records)} queries, {skipped} lines skipped")
    return ParseResult(records=records, skipped=skipped)


def read_lines(path: str) -> Iterator[str]:
    """Lazily yield the lines of a file, or of standard input when ``path`` is ``-``."""
    if path == "-":
        yield from io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8", errors="replace")
        return
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        yield from f


def read_log(path: str, fmt: Union[str, LogFormat]) -> ParseResult:
    """Parse a log file, or standard input when ``path`` is ``-``."""
    return parse_lines(fmt, read_lines(path))


def matches_apex(qname: str, apexes: Sequence[str]) -> bool:
    """True when no apex is given or ``qname`` lies at or under one of them."""
    return not apexes or any(split_apex(qname, apex) is not None for apex in apexes)


def filter_apex(records: Sequence[LogRecord], apexes: Sequence[str]) -> List[LogRecord]:
    return [r for r in records if matches_apex(r.qname, apexes)]
