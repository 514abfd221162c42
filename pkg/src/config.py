
import os
import logging
from typing import Callable, List, TypeVar
from dotenv import load_dotenv

from src.errors import UsageError

load_dotenv()

logging.basicConfig(
    level=os.environ.get("DNSTUNNEL_LOG_LEVEL", "INFO").upper(),
    format="%(asctime)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger("dnstunnel")

DEFAULT_APEXES = ("harpozedcompute.com", "securitytesting.online")

T = TypeVar("T")


def _env(name: str, default: str, cast: Callable[[str], T]) -> T:
    raw = os.environ.get(name, default)
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"{name}={raw!r} is not a valid {cast.__name__}") from None


def get_seed() -> int:
    return _env("DNSTUNNEL_SEED", "7", int)


def get_threshold() -> float:
    return _env("DNSTUNNEL_THRESHOLD", "0.90", float)


def get_epochs() -> int:
    return _env("DNSTUNNEL_EPOCHS", "10", int)


def get_batch_size() -> int:
    return _env("DNSTUNNEL_BATCH_SIZE", "128", int)


def get_jobs() -> int:
    return _env("DNSTUNNEL_JOBS", "1", int)


def get_apexes() -> List[str]:
    raw = os.environ.get("DNSTUNNEL_APEXES")
    if not raw:
        return list(DEFAULT_APEXES)
    # Accept "a.com, b.net" as well as "a.com,b.net"
    return [apex.strip().lower().strip(".") for apex in raw.split(",") if apex.strip()]
