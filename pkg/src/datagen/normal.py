"""Normal-domain pools: feed-file loading plus synthetic stand-ins for each source."""

import hashlib
from typing import Callable, Dict, List, Tuple

import numpy as np

from src.config import logger
from src.domain import DomainSample, Label, Origin, is_hostname, normalize_name
from src.errors import UsageError

_STREAM_ALEXA = 11
_STREAM_BAMBENEK = 12
_STREAM_CZ = 13

WORDS = (
    "news", "mail", "shop", "cloud", "video", "music", "photo", "travel", "game", "sport",
    "book", "food", "home", "auto", "bank", "health", "learn", "code", "data", "city",
    "live", "star", "blue", "green", "red", "fast", "smart", "open", "free", "best",
    "world", "market", "media", "social", "search", "map", "weather", "store", "daily", "tech",
    "app", "web", "net", "tube", "chat", "blog", "wiki", "docs", "drive", "pay",
    "trade", "crypto", "coin", "job", "career", "school", "college", "kids", "family", "pet",
    "garden", "style", "fashion", "beauty", "fit", "yoga", "run", "bike", "car", "flight",
    "hotel", "ticket", "movie", "show", "radio", "tv", "box", "hub", "lab", "zone",
    "point", "line", "link", "site", "page", "post", "press", "times", "today", "global",
    "local", "metro", "north", "south", "east", "west", "sun", "moon", "sky", "sea",
    "river", "stone", "wood", "fire", "snow", "rain", "apple", "orange", "lemon", "coffee",
    "tea", "pizza", "burger", "kitchen", "recipe", "craft", "art", "design", "print", "paper",
    "office", "work", "team", "group", "club", "union", "bridge", "tower", "gate", "port",
    "secure", "safe", "guard", "trust", "prime", "gold", "silver", "diamond", "pixel", "byte",
)

SUBDOMAINS = ("www", "m", "cdn", "api", "static", "img", "login", "mail", "en", "shop")
COMMON_TLDS = ("com", "com", "com", "com", "net", "org", "io", "co", "info", "de", "uk", "ru", "br", "in")
DGA_TLDS = ("com", "net", "org", "biz", "info", "top", "xyz", "ru", "cc")

CZ_ONSETS = ("str", "kr", "vl", "pr", "zm", "hr", "br", "tv", "ml", "tr", "sk", "chl", "st",
             "sm", "dv", "cht", "zl", "sv", "kl", "pl", "sr", "vr", "ct", "dr")
CZ_NUCLEI = ("a", "e", "i", "o", "u", "y", "r", "l")
CZ_CODAS = ("", "k", "n", "t", "st", "sk", "ch", "v", "z", "l", "c", "d")


def load_normal(path: str, origin: Origin) -> Tuple[List[DomainSample], int]:
    """Read one domain per line; returns the samples and the number of invalid lines.

    Lines may also be ``rank,domain`` (top-sites lists) or ``domain,...`` (threat feeds);
    the first comma-separated field containing a dot is taken as the name.
    """
    samples: List[DomainSample] = []
    seen = set()
    skipped = 0
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [normalize_name(part).lower() for part in text.split(",")]
            name = next((part for part in fields if "." in part), fields[0])
            if not is_hostname(name):
                skipped += 1
                logger.debug(f"{path}:{lineno}: not a hostname: {text!r}")
                continue
            if name in seen:
                continue
            seen.add(name)
            samples.append(DomainSample(name=name, label=Label.NORMAL, origin=origin))
    if skipped:
        logger.warning(f"{path}: skipped {skipped} invalid lines")
    logger.info(f"Loaded {len(samples)} {origin.value} domains from {path}")
    return samples, skipped


def _choice(rng: np.random.Generator, options) -> str:
    return options[int(rng.integers(len(options)))]


def _alexa_name(rng: np.random.Generator, index: int) -> str:
    shape = int(rng.integers(5))
    first, second = _choice(rng, WORDS), _choice(rng, WORDS)
    tld = _choice(rng, COMMON_TLDS)
    if shape == 0:
        return f"{first}.{tld}"
    if shape == 1:
        return f"{first}{second}.{tld}"
    if shape == 2:
        return f"{first}-{second}.{tld}"
    if shape == 3:
        return f"{_choice(rng, SUBDOMAINS)}.{first}{second}.{tld}"
    return f"{first}{int(rng.integers(1, 100))}.{tld}"


def _bambenek_name(rng: np.random.Generator, index: int) -> str:
    family = index % 3
    if family == 2:
        # conficker-style: short uniform letters
        length = int(rng.integers(8, 13))
        label = "".join(chr(ord("a") + int(c)) for c in rng.integers(0, 26, size=length))
        return f"{label}.{_choice(rng, DGA_TLDS[:5])}"
    # cryptolocker- and necurs-style: letters drawn from a sha256 digest
    salt = int(rng.integers(1 << 31))
    digest = hashlib.sha256(f"{family}-{salt}-{index}".encode()).hexdigest()
    length = (12 if family == 0 else 15) + int(digest[:2], 16) % (8 if family == 0 else 10)
    label = "".join(chr(ord("a") + int(digest[(j * 2) % 60:(j * 2) % 60 + 2], 16) % 26)
                    for j in range(length))
    return f"{label}.{DGA_TLDS[int(digest[-2:], 16) % len(DGA_TLDS)]}"


def _cz_word(rng: np.random.Generator) -> str:
    syllables = int(rng.integers(2, 4))
    return "".join(_choice(rng, CZ_ONSETS) + _choice(rng, CZ_NUCLEI) + _choice(rng, CZ_CODAS)
                   for _ in range(syllables))


def _cz_name(rng: np.random.Generator, index: int) -> str:
    word = _cz_word(rng)
    if rng.random() < 0.25:
        return f"www.{word}.cz"
    if rng.random() < 0.2:
        return f"{_cz_word(rng)}-{word}.cz"
    return f"{word}.cz"


_SYNTHESIZERS: Dict[Origin, Tuple[int, Callable[[np.random.Generator, int], str]]] = {
    Origin.ALEXA: (_STREAM_ALEXA, _alexa_name),
    Origin.BAMBENEK: (_STREAM_BAMBENEK, _bambenek_name),
    Origin.CZ: (_STREAM_CZ, _cz_name),
}


def synthesize_normal(n: int, origin: Origin, seed: int) -> List[DomainSample]:
    """``n`` distinct synthetic names for ``origin``; duplicates are redrawn from later positions."""
    if origin not in _SYNTHESIZERS:
        raise UsageError(f"no synthetic generator for origin {origin.value}")
    stream, make = _SYNTHESIZERS[origin]
    names: List[str] = []
    seen = set()
    index = 0
    limit = max(100, 50 * n)
    while len(names) < n:
        if index >= limit:
            raise UsageError(f"cannot draw {n} distinct {origin.value} names")
        name = make(np.random.default_rng([seed, stream, index]), index)
        index += 1
        if name not in seen:
            seen.add(name)
            names.append(name)
    return [DomainSample(name=name, label=Label.NORMAL, origin=origin) for name in names]


def gen_alexa_like(n: int, seed: int) -> List[DomainSample]:
    return synthesize_normal(n, Origin.ALEXA, seed)


def gen_bambenek_like(n: int, seed: int) -> List[DomainSample]:
    return synthesize_normal(n, Origin.BAMBENEK, seed)


def gen_cz_like(n: int, seed: int) -> List[DomainSample]:
    return synthesize_normal(n, Origin.CZ, seed)
