"""Adam optimisation, the epoch loop, stratified k-fold CV and hyper-parameter grid search."""

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field
from sklearn.model_selection import StratifiedKFold

from src import config
from src.config import logger
from src.domain import DomainSample
from src.errors import DataFormatError, UsageError
from src.evaluation import f1_tunneling
from src.neuralnet import (
    Gradients,
    Hyperparams,
    ModelParams,
    backward_arrays,
    init_params,
    mean_loss,
    predict_batches,
)
from src.tokenizer import VOCAB_SIZE, Vocabulary, build_vocabulary, encode_batch

CV_THRESHOLD = 0.5
HP_KEYS = ("nf", "ks", "sl", "d", "l", "hn")


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(10, ge=1)
    batch_size: int = Field(128, ge=1)
    seed: int = Field(7, ge=0)
    lr: float = Field(0.001, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    track_train_loss: bool = Field(
        False, description="Re-score the whole training set after every epoch")

    @classmethod
    def from_env(cls, **overrides) -> "TrainConfig":
        values = {"epochs": config.get_epochs(), "batch_size": config.get_batch_size(),
                  "seed": config.get_seed()}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class GridResult(BaseModel):
    hp: Hyperparams
    mean_f1: float = Field(ge=0.0, le=1.0)
    sd_f1: float = Field(ge=0.0)
    parameter_count: int
    grid_index: int = Field(description="Position of the combination in the submitted grid")


def count_parameters(hp: Hyperparams, vocab_size: int = VOCAB_SIZE) -> int:
    if vocab_size < 1:
        raise UsageError("vocabulary size must be positive")
    embedding = vocab_size * hp.d
    conv = hp.ks * hp.d * hp.nf + hp.nf
    dense1 = hp.conv_out_len * hp.nf * hp.hn + hp.hn
    dense2 = hp.hn + 1
    return embedding + conv + dense1 + dense2


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: ModelParams, cfg: Optional[TrainConfig] = None) -> "AdamState":
        cfg = cfg or TrainConfig()
        return cls(m=params.zeros_like(), v=params.zeros_like(), t=0,
                   lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)


def adam_step(params: ModelParams, grads: Gradients, state: AdamState) -> Tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update; rebinds the tensors of ``params`` and ``state`` and returns both."""
    p_tensors, g_tensors = params.tensors(), grads.tensors()
    m_tensors, v_tensors = state.m.tensors(), state.v.tensors()
    for name, p in p_tensors.items():
        if g_tensors[name].shape != p.shape or m_tensors[name].shape != p.shape:
            raise UsageError(f"shape mismatch for {name}: params {p.shape}, grads {g_tensors[name].shape}")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, p in p_tensors.items():
        g = g_tensors[name]
        m = state.beta1 * m_tensors[name] + (1.0 - state.beta1) * g
        v = state.beta2 * v_tensors[name] + (1.0 - state.beta2) * g * g
        setattr(state.m, name, m)
        setattr(state.v, name, v)
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        setattr(params, name, p - update)
    return params, state


@dataclass
class TrainingRun:
    params: ModelParams
    epoch_losses: List[float] = field(default_factory=list)
    train_losses: List[float] = field(default_factory=list)


def _encode_dataset(dataset: Sequence[DomainSample], l: int, vocab: Vocabulary) -> Tuple[np.ndarray, np.ndarray]:
    x = encode_batch((s.name for s in dataset), l, vocab)
    y = np.array([s.target for s in dataset], dtype=np.float64)
    return x, y


def fit(dataset: Sequence[DomainSample], hp: Hyperparams, cfg: TrainConfig,
        vocab: Optional[Vocabulary] = None) -> TrainingRun:
    if len({s.label for s in dataset}) < 2:
        raise UsageError("training data must contain both normal and tunneling samples")
    vocab = vocab or build_vocabulary()
    x, y = _encode_dataset(dataset, hp.l, vocab)

    params = init_params(hp, cfg.seed, len(vocab))
    state = AdamState.fresh(params, cfg)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    run = TrainingRun(params=params)

    logger.info(f"Training {hp.as_line()} on {len(y)} samples for {cfg.epochs} epochs")
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grads, loss = backward_arrays(run.params, x[idx], y[idx])
            run.params, state = adam_step(run.params, grads, state)
            total += loss * len(idx)
            logger.debug(f"epoch {epoch} step {state.t} loss {loss:.6f}")
        epoch_loss = total / len(order)
        run.epoch_losses.append(epoch_loss)
        if cfg.track_train_loss:
            run.train_losses.append(mean_loss(run.params, x, y))
        logger.info(f"epoch {epoch}/{cfg.epochs} mean loss {epoch_loss:.6f}")
    return run


def train(dataset: Sequence[DomainSample], hp: Hyperparams, cfg: TrainConfig,
          vocab: Optional[Vocabulary] = None) -> ModelParams:
    return fit(dataset, hp, cfg, vocab).params


def stratified_folds(targets: Sequence[int], k: int, seed: int) -> List[np.ndarray]:
    """Validation index sets of a stratified partition into ``k`` folds."""
    targets = np.asarray(targets)
    if k < 2:
        raise UsageError(f"need at least 2 folds, got {k}")
    if k > len(targets):
        raise UsageError(f"cannot split {len(targets)} samples into {k} folds")
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    try:
        return [val for _, val in splitter.split(np.zeros(len(targets)), targets)]
    except ValueError as ex:
        raise UsageError(str(ex)) from ex


def kfold_cross_validate(dataset: Sequence[DomainSample], hp: Hyperparams, k: int = 5,
                         cfg: Optional[TrainConfig] = None,
                         vocab: Optional[Vocabulary] = None) -> Tuple[float, float]:
    cfg = cfg or TrainConfig()
    vocab = vocab or build_vocabulary()
    targets = [s.target for s in dataset]
    scores = []
    for fold, val_idx in enumerate(stratified_folds(targets, k, cfg.seed), start=1):
        held_out = set(val_idx.tolist())
        train_part = [s for i, s in enumerate(dataset) if i not in held_out]
        val_part = [dataset[i] for i in val_idx]
        params = train(train_part, hp, cfg, vocab)
        x_val, y_val = _encode_dataset(val_part, hp.l, vocab)
        prob = predict_batches(params, x_val)
        score = f1_tunneling(y_val.astype(int), prob >= CV_THRESHOLD)
        logger.info(f"fold {fold}/{k} F1 {score:.4f}")
        scores.append(score)
    return float(np.mean(scores)), float(np.std(scores))


def _score_point(index: int, hp: Hyperparams, dataset: Sequence[DomainSample], k: int,
                 cfg: TrainConfig, vocab: Vocabulary) -> GridResult:
    mean_f1, sd_f1 = kfold_cross_validate(dataset, hp, k, cfg, vocab)
    logger.info(f"grid point {index}: {hp.as_line()} -> F1 {mean_f1:.4f} (sd {sd_f1:.4f})")
    return GridResult(hp=hp, mean_f1=mean_f1, sd_f1=sd_f1,
                      parameter_count=count_parameters(hp, len(vocab)), grid_index=index)


def grid_search(dataset: Sequence[DomainSample], grid: Sequence[Hyperparams],
                cfg: Optional[TrainConfig] = None, k: int = 5, n_jobs: int = 1,
                vocab: Optional[Vocabulary] = None) -> List[GridResult]:
    if not grid:
        raise UsageError("grid must contain at least one combination")
    cfg = cfg or TrainConfig()
    vocab = vocab or build_vocabulary()
    results = Parallel(n_jobs=n_jobs)(
        delayed(_score_point)(i, hp, dataset, k, cfg, vocab) for i, hp in enumerate(grid))
    return sorted(results, key=lambda r: (-r.mean_f1, r.parameter_count, r.grid_index))


def default_grid() -> List[Hyperparams]:
    return [
        Hyperparams(nf=nf, ks=ks, sl=1, d=d, l=45, hn=hn)
        for nf, ks, d, hn in itertools.product((256, 1024), (2, 4), (50, 100), (128, 256))
    ]


def parse_grid_line(line: str, lineno: int = 0) -> Optional[Hyperparams]:
    text = line.split("#", 1)[0].strip()
    if not text:
        return None
    values = {}
    for token in re.split(r"[\s,]+", text):
        key, sep, raw = token.partition("=")
        if not sep or key not in HP_KEYS or key in values:
            raise DataFormatError(f"grid line {lineno}: bad or repeated entry {token!r}")
        try:
            values[key] = int(raw)
        except ValueError:
            raise DataFormatError(f"grid line {lineno}: {key} must be an integer, got {raw!r}")
    missing = [key for key in HP_KEYS if key not in values]
    if missing:
        raise DataFormatError(f"grid line {lineno}: missing {', '.join(missing)}")
    try:
        return Hyperparams(**values)
    except ValueError as ex:
        raise DataFormatError(f"grid line {lineno}: {ex}") from ex


def parse_grid(lines: Iterable[str]) -> List[Hyperparams]:
    grid = []
    for lineno, line in enumerate(lines, start=1):
        hp = parse_grid_line(line, lineno)
        if hp is not None:
            grid.append(hp)
    return grid


def load_grid(path: str) -> List[Hyperparams]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_grid(f)
