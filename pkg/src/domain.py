"""Core domain-name types: labelled samples, tool tags and name validation."""

import re
from enum import Enum
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MAX_NAME_LENGTH = 253
MAX_LABEL_LENGTH = 63

_HOSTNAME_LABEL = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]{0,61}[a-z0-9_])?$")
_QNAME_CHARS = re.compile(r"^[\x21-\x7e]+$")


class Label(str, Enum):
    NORMAL = "normal"
    TUNNELING = "tunneling"

    @property
    def target(self) -> int:
        return 1 if self is Label.TUNNELING else 0


class Tool(str, Enum):
    DNSCAT2 = "dnscat2"
    DNSEXFILTRATOR = "DNSexfiltrator"
    IODINE = "iodine"
    TUNS = "tuns"
    DNS2TCP = "dns2tcp"
    NOT_SPECIFIED = "NotSpecified"
    NONE = "none"


class Origin(str, Enum):
    ALEXA = "alexa-like"
    BAMBENEK = "bambenek-like"
    CZ = "cz-like"
    SYNTHETIC = "synthetic"


class ToolProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    tool: Tool
    description: str
    throughput: str = Field(description="High or Low, as observed for the real tool")
    tagged_as: Tool = Field(description="Tool tag carried by the generated samples")


TOOL_PROFILES: Dict[Tool, ToolProfile] = {
    profile.tool: profile
    for profile in (
        ToolProfile(tool=Tool.TUNS, description="IpV4 over DNS tunneling", throughput="High",
                    tagged_as=Tool.NOT_SPECIFIED),
        ToolProfile(tool=Tool.DNSCAT2, description="C&C oriented DNS tunneling", throughput="High",
                    tagged_as=Tool.DNSCAT2),
        ToolProfile(tool=Tool.DNS2TCP, description="TCP over DNS tunneling", throughput="High",
                    tagged_as=Tool.NOT_SPECIFIED),
        ToolProfile(tool=Tool.IODINE, description="IpV4 over DNS tunneling", throughput="High",
                    tagged_as=Tool.IODINE),
        ToolProfile(tool=Tool.DNSEXFILTRATOR, description="simple data exchange over DNS",
                    throughput="Low", tagged_as=Tool.DNSEXFILTRATOR),
    )
}

# Order used when reporting per-tool detection rates.
REPORTED_TOOLS = (Tool.DNSCAT2, Tool.DNSEXFILTRATOR, Tool.IODINE, Tool.NOT_SPECIFIED)


def within_dns_limits(name: str) -> bool:
    if not name or len(name) > MAX_NAME_LENGTH:
        return False
    return all(0 < len(label) <= MAX_LABEL_LENGTH for label in name.split("."))


def is_hostname(name: str) -> bool:
    """Strict hostname syntax (letters, digits, hyphen, underscore), case-insensitive."""
    if not within_dns_limits(name):
        return False
    return all(_HOSTNAME_LABEL.match(label) for label in name.lower().split("."))


def is_qname(name: str) -> bool:
    """Looser check for names seen on the wire: printable ASCII without blanks."""
    return within_dns_limits(name) and bool(_QNAME_CHARS.match(name))


def normalize_name(raw: str) -> str:
    return raw.strip().rstrip(".")


def split_apex(name: str, apex: str) -> Optional[str]:
    """Return the labels in front of ``apex`` or None when ``name`` is not under it."""
    lowered, apex = name.lower(), apex.lower().strip(".")
    if lowered == apex:
        return ""
    if lowered.endswith("." + apex):
        return name[: len(name) - len(apex) - 1]
    return None


class DomainSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(description="Queried domain name, case preserved")
    label: Label
    tool: Tool = Tool.NONE
    origin: Origin = Origin.SYNTHETIC

    @field_validator("name")
    @classmethod
    def _check_dns_limits(cls, value: str) -> str:
        if not within_dns_limits(value):
            raise ValueError(f"name violates DNS length limits: {value!r}")
        return value

    @model_validator(mode="after")
    def _check_tool_matches_label(self) -> "DomainSample":
        if self.label is Label.NORMAL and self.tool is not Tool.NONE:
            raise ValueError("normal samples carry no tool tag")
        if self.label is Label.TUNNELING and self.tool is Tool.NONE:
            raise ValueError("tunneling samples need a tool tag")
        return self

    @property
    def target(self) -> int:
        return self.label.target
