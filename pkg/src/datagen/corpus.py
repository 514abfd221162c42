"""Corpus specification, assembly, stratified train/test split and CSV persistence."""

import csv
import json
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from sklearn.model_selection import train_test_split

from src import config
from src.config import logger
from src.datagen.normal import synthesize_normal
from src.datagen.tools import GENERATORS
from src.domain import TOOL_PROFILES, DomainSample, Label, Origin, Tool
from src.errors import DataFormatError, UsageError

CORPUS_HEADER = ("name", "label", "tool", "origin")

# Class distribution of the reference dataset.
REFERENCE_TUNNELING: Dict[Tool, int] = {
    Tool.DNSCAT2: 23,
    Tool.DNSEXFILTRATOR: 78,
    Tool.IODINE: 346,
    Tool.NOT_SPECIFIED: 7553,
}
REFERENCE_NORMAL: Dict[Origin, int] = {
    Origin.ALEXA: 5000,
    Origin.BAMBENEK: 3000,
    Origin.CZ: 511,
}

DESK_PER_CLASS = 2000
FULL_PER_CLASS = 8000


def scale_counts(counts: Mapping, total: int) -> Dict:
    """Largest-remainder rounding of ``counts`` to ``total``; ties go to earlier keys."""
    weight = sum(counts.values())
    exact = {key: value * total / weight for key, value in counts.items()}
    scaled = {key: int(np.floor(value)) for key, value in exact.items()}
    order = sorted(enumerate(exact), key=lambda item: (-(exact[item[1]] - scaled[item[1]]), item[0]))
    for _, key in order[: total - sum(scaled.values())]:
        scaled[key] += 1
    return scaled


class CorpusSpec(BaseModel):
    tunneling: Dict[Tool, int] = Field(description="Samples per tool tag")
    normal: Dict[Origin, int] = Field(description="Samples per normal source")
    apexes: List[str] = Field(default_factory=config.get_apexes, min_length=1)
    seed: int = Field(default_factory=config.get_seed, ge=0)
    balance: bool = True

    @model_validator(mode="after")
    def _check_counts(self) -> "CorpusSpec":
        if any(v < 0 for v in list(self.tunneling.values()) + list(self.normal.values())):
            raise ValueError("counts must be non-negative")
        if Tool.NONE in self.tunneling:
            raise ValueError("tunneling counts need a tool tag")
        if Origin.SYNTHETIC in self.normal:
            raise ValueError("normal counts need a source origin")
        if self.balance and self.total(Label.TUNNELING) != self.total(Label.NORMAL):
            raise ValueError(f"balanced corpus requested but tunneling={self.total(Label.TUNNELING)} "
                             f"and normal={self.total(Label.NORMAL)}")
        return self

    def total(self, label: Label) -> int:
        return sum((self.tunneling if label is Label.TUNNELING else self.normal).values())


def desk_spec(seed: Optional[int] = None, apexes: Optional[Sequence[str]] = None) -> CorpusSpec:
    return _preset(DESK_PER_CLASS, scale_counts(REFERENCE_TUNNELING, DESK_PER_CLASS), seed, apexes)


def full_spec(seed: Optional[int] = None, apexes: Optional[Sequence[str]] = None) -> CorpusSpec:
    return _preset(FULL_PER_CLASS, dict(REFERENCE_TUNNELING), seed, apexes)


def _preset(per_class: int, tunneling: Dict[Tool, int], seed, apexes) -> CorpusSpec:
    extra = {}
    if seed is not None:
        extra["seed"] = seed
    if apexes:
        extra["apexes"] = list(apexes)
    return CorpusSpec(tunneling=tunneling, normal=scale_counts(REFERENCE_NORMAL, per_class), **extra)


def load_corpus_spec(source: str, seed: Optional[int] = None,
                     apexes: Optional[Sequence[str]] = None) -> CorpusSpec:
    """``desk``/``full`` preset names, or a JSON file with CorpusSpec fields."""
    if source == "desk":
        return desk_spec(seed, apexes)
    if source == "full":
        return full_spec(seed, apexes)
    with open(source, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as ex:
            raise DataFormatError(f"{source}: not valid JSON ({ex})") from ex
    if seed is not None:
        raw["seed"] = seed
    if apexes:
        raw["apexes"] = list(apexes)
    try:
        return CorpusSpec(**raw)
    except (ValidationError, TypeError) as ex:
        raise DataFormatError(f"{source}: {ex}") from ex


def build_corpus(spec: CorpusSpec,
                 normal_pools: Optional[Mapping[Origin, Sequence[DomainSample]]] = None) -> List[DomainSample]:
    normal_pools = normal_pools or {}
    corpus: List[DomainSample] = []

    for tool, count in spec.tunneling.items():
        if count == 0:
            continue
        profile = TOOL_PROFILES.get(tool)
        if profile is not None:
            logger.info(f"{tool.value}: {profile.description} ({profile.throughput} throughput), "
                        f"{count} samples tagged {profile.tagged_as.value}")
        corpus.extend(GENERATORS[tool](count, spec.apexes, spec.seed))

    draw_rng = np.random.default_rng([spec.seed, 21])
    for origin, count in spec.normal.items():
        if count == 0:
            continue
        pool = normal_pools.get(origin)
        if pool is None:
            logger.info(f"{origin.value}: synthesizing {count} samples")
            corpus.extend(synthesize_normal(count, origin, spec.seed))
            continue
        if count > len(pool):
            raise UsageError(f"pool {origin.value} holds {len(pool)} domains, {count} requested")
        picked = np.sort(draw_rng.choice(len(pool), size=count, replace=False))
        logger.info(f"{origin.value}: drew {count} of {len(pool)} feed domains")
        corpus.extend(pool[i] for i in picked)

    order = np.random.default_rng([spec.seed, 22]).permutation(len(corpus))
    return [corpus[i] for i in order]


def split_train_test(corpus: Sequence[DomainSample], train_fraction: float = 0.8,
                     seed: int = 7) -> Tuple[List[DomainSample], List[DomainSample]]:
    if not 0.0 < train_fraction < 1.0:
        raise UsageError(f"train fraction must lie strictly between 0 and 1, got {train_fraction}")
    indices = np.arange(len(corpus))
    try:
        train_idx, test_idx = train_test_split(
            indices, train_size=train_fraction, random_state=seed,
            stratify=[s.label.value for s in corpus])
    except ValueError as ex:
        raise UsageError(f"cannot split corpus of {len(corpus)} samples: {ex}") from ex
    return [corpus[i] for i in train_idx], [corpus[i] for i in test_idx]


def write_corpus(samples: Sequence[DomainSample], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CORPUS_HEADER)
        for s in samples:
            writer.writerow((s.name, s.label.value, s.tool.value, s.origin.value))
    logger.info(f"Wrote {len(samples)} samples to {path}")


def read_corpus(path: str) -> List[DomainSample]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != CORPUS_HEADER:
            raise DataFormatError(f"{path}: expected header {','.join(CORPUS_HEADER)}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CORPUS_HEADER):
                raise DataFormatError(f"{path}:{lineno}: expected {len(CORPUS_HEADER)} fields, got {len(row)}")
            try:
                samples.append(DomainSample(**dict(zip(CORPUS_HEADER, row))))
            except ValidationError as ex:
                raise DataFormatError(f"{path}:{lineno}: {ex.errors()[0]['msg']}") from ex
    return samples
