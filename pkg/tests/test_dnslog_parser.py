import io
import sys

import pytest

from src.dnslog_parser import LogFormat, LogRecord, filter_apex, parse_line, parse_lines, read_log
from src.errors import UsageError

DNSMASQ_LOG = """\
Jan  1 00:00:00 dnsmasq[1]: query[A] foo.bar from 10.0.0.2
Jan  1 00:00:00 dnsmasq[1]: forwarded foo.bar to 1.1.1.1
2024-03-05T10:11:12Z dnsmasq[77]: query[TXT] MZXW6YTB.T.Example.org. from 10.0.0.9
Jan  1 00:00:01 dnsmasq[1]: reply foo.bar is 93.184.216.34
"""

BIND_LOG = """\
; querylog excerpt
05-Mar-2024 10:11:12.345 queries: info: client @0x7f 10.0.0.3#5353 (a.b.c): query: a.b.c IN A +E(0)K (10.0.0.1)
05-Mar-2024 10:11:13.000 queries: info: client @0x7f 10.0.0.3#5353 (x.t.example.org): query: x.t.example.org IN TXT + (10.0.0.1)
"""


def test_plain_line():
    record = parse_line("plain", "  x.evil.com.  \n", 4)
    assert record == LogRecord(qname="x.evil.com", timestamp=None, source_line=4)


def test_plain_skips_comments_and_garbage():
    assert parse_line(LogFormat.PLAIN, "# header") is None
    assert parse_line(LogFormat.PLAIN, "") is None
    assert parse_line(LogFormat.PLAIN, "has space.com") is None


def test_dnsmasq_grammar():
    record = parse_line("dnsmasq", "Jan 1 00:00:00 dnsmasq[1]: query[A] foo.bar from 10.0.0.2")
    assert record.qname == "foo.bar"
    assert record.timestamp is None


def test_dnsmasq_iso_timestamp():
    record = parse_line("dnsmasq", DNSMASQ_LOG.splitlines()[2])
    assert record.qname == "MZXW6YTB.T.Example.org"
    assert record.timestamp == 1709633472.0


def test_bind_querylog():
    result = parse_lines("bind", BIND_LOG.splitlines())
    assert [r.qname for r in result.records] == ["a.b.c", "x.t.example.org"]
    assert [r.source_line for r in result.records] == [2, 3]
    assert result.skipped == 1
    assert result.line_count == 3
    assert result.records[1].timestamp == pytest.approx(1709633473.0)


def test_bind_comment_line_is_skipped():
    result = parse_lines(LogFormat.BIND, ["# rotated 2024-03-05"])
    assert result.records == [] and result.skipped == 1


def test_dnsmasq_counts_non_query_lines():
    result = parse_lines("dnsmasq", DNSMASQ_LOG.splitlines())
    assert [r.source_line for r in result.records] == [1, 3]
    assert result.skipped == 2


def test_bytes_with_bad_utf8_are_tolerated():
    assert parse_line("plain", b"ok.example.com\xff") is None
    assert parse_line("plain", b"ok.example.com").qname == "ok.example.com"


def test_unsupported_format():
    with pytest.raises(UsageError):
        parse_line("unbound", "x.com")
    with pytest.raises(UsageError):
        parse_lines("unbound", [])


def test_read_log_file_and_stdin(tmp_path, monkeypatch):
    path = tmp_path / "names.txt"
    path.write_text("a.example.com\n\nb.example.com\n")
    assert [r.qname for r in read_log(str(path), "plain").records] == ["a.example.com", "b.example.com"]

    fake_stdin = io.TextIOWrapper(io.BytesIO(b"c.example.com\n"))
    monkeypatch.setattr(sys, "stdin", fake_stdin)
    assert [r.qname for r in read_log("-", "plain").records] == ["c.example.com"]


def test_read_log_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_log(str(tmp_path / "nope.log"), "plain")


def test_filter_apex():
    records = [LogRecord(qname=q, source_line=i) for i, q in
               enumerate(["a.t.example.org", "T.EXAMPLE.ORG", "example.org", "xt.example.org"])]
    kept = filter_apex(records, ["t.example.org"])
    assert [r.qname for r in kept] == ["a.t.example.org", "T.EXAMPLE.ORG"]
    assert filter_apex(records, []) == records
