import pytest
from pydantic import ValidationError

from src import config
from src.errors import UsageError
from src.domain import (
    TOOL_PROFILES,
    DomainSample,
    Label,
    Tool,
    is_hostname,
    is_qname,
    split_apex,
    within_dns_limits,
)


def test_dns_length_limits():
    assert within_dns_limits("a" * 63 + ".com")
    assert not within_dns_limits("a" * 64 + ".com")
    assert not within_dns_limits(".".join(["abcdefg"] * 32))
    assert not within_dns_limits("a..com")
    assert not within_dns_limits("")


def test_hostname_and_qname_checks():
    assert is_hostname("WWW.Example.com")
    assert not is_hostname("-bad.com")
    assert not is_hostname("a+b.com")
    assert is_qname("a+b/c=.t.example.org")
    assert not is_qname("has space.com")


def test_split_apex():
    assert split_apex("a.b.T.Example.org", "t.example.org") == "a.b"
    assert split_apex("t.example.org", "t.example.org.") == ""
    assert split_apex("at.example.org", "t.example.org") is None


def test_sample_validation():
    with pytest.raises(ValidationError):
        DomainSample(name="x.com", label=Label.NORMAL, tool=Tool.IODINE)
    with pytest.raises(ValidationError):
        DomainSample(name="x.com", label=Label.TUNNELING)
    with pytest.raises(ValidationError):
        DomainSample(name="a" * 70 + ".com", label=Label.NORMAL)
    assert DomainSample(name="x.com", label="tunneling", tool="dnscat2").target == 1


def test_failed_tools_are_tagged_not_specified():
    assert TOOL_PROFILES[Tool.TUNS].tagged_as is Tool.NOT_SPECIFIED
    assert TOOL_PROFILES[Tool.DNS2TCP].tagged_as is Tool.NOT_SPECIFIED
    assert TOOL_PROFILES[Tool.DNSEXFILTRATOR].throughput == "Low"


def test_apexes_from_environment(monkeypatch):
    monkeypatch.setenv("DNSTUNNEL_APEXES", " A.example.com. , b.example.net")
    assert config.get_apexes() == ["a.example.com", "b.example.net"]
    monkeypatch.delenv("DNSTUNNEL_APEXES")
    assert config.get_apexes() == list(config.DEFAULT_APEXES)


@pytest.mark.parametrize("name, accessor", [
    ("DNSTUNNEL_SEED", config.get_seed),
    ("DNSTUNNEL_THRESHOLD", config.get_threshold),
    ("DNSTUNNEL_BATCH_SIZE", config.get_batch_size),
])
def test_malformed_environment_value_is_usage_error(monkeypatch, name, accessor):
    monkeypatch.setenv(name, "abc")
    with pytest.raises(UsageError, match=name):
        accessor()
