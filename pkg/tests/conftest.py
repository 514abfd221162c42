from pathlib import Path

import numpy as np
import pytest

from src.datagen import load_normal
from src.domain import DomainSample, Label, Origin, Tool
from src.neuralnet import Hyperparams, ModelParams, init_params
from src.tokenizer import build_vocabulary
from src.training import TrainConfig

APEX = "t.example.org"
SAMPLE_DATA = Path(__file__).resolve().parent.parent / "sample_data"
BUNDLED_FEEDS = {Origin.ALEXA: "top_sites.txt", Origin.BAMBENEK: "dga_feed.txt"}


@pytest.fixture
def vocab():
    return build_vocabulary()


@pytest.fixture
def tiny_hp():
    return Hyperparams(nf=4, ks=3, sl=1, d=5, l=6, hn=3)


@pytest.fixture
def toy_hp():
    return Hyperparams(nf=16, ks=2, sl=1, d=8, l=8, hn=16)


@pytest.fixture
def toy_cfg():
    return TrainConfig(epochs=10, batch_size=16, seed=3, lr=0.01)


@pytest.fixture
def tiny_params(tiny_hp):
    return init_params(tiny_hp, seed=11)


def random_params(hp: Hyperparams, seed: int, scale: float = 0.5) -> ModelParams:
    """Every tensor, biases included, drawn from N(0, scale^2)."""
    rng = np.random.default_rng(seed)
    params = ModelParams.zeros(hp)
    for name, tensor in params.tensors().items():
        setattr(params, name, np.array(rng.normal(0.0, scale, size=tensor.shape), dtype=np.float64))
    return params


def separable_corpus(per_class: int = 100):
    normal = [DomainSample(name="aaaaaaaa", label=Label.NORMAL) for _ in range(per_class)]
    tunnel = [DomainSample(name="zzzzzzzz", label=Label.TUNNELING, tool=Tool.IODINE)
              for _ in range(per_class)]
    mixed = []
    for a, b in zip(normal, tunnel):
        mixed.extend((a, b))
    return mixed


def bundled_normal_pools():
    """Feed domains shipped in sample_data, keyed by origin; cz-like names stay synthetic."""
    return {origin: load_normal(str(SAMPLE_DATA / name), origin)[0] for origin, name in BUNDLED_FEEDS.items()}


@pytest.fixture
def separable():
    return separable_corpus()
