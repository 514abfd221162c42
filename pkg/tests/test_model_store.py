import struct

import numpy as np
import pytest

from conftest import random_params
from src.errors import (
    BadMagicError,
    ChecksumMismatchError,
    ModelFormatError,
    ShapeMismatchError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from src.evaluation import predict_proba
from src.model_store import MAGIC, load, model_from_bytes, model_to_bytes, pack_model, save
from src.neuralnet import DEFAULT_HYPERPARAMS, TENSOR_NAMES, Hyperparams
from src.tokenizer import Vocabulary

HP = Hyperparams(nf=6, ks=3, sl=1, d=4, l=16, hn=5)


@pytest.fixture
def model_bytes(vocab):
    return model_to_bytes(random_params(HP, seed=8), HP, vocab)


def _random_names(count, seed):
    rng = np.random.default_rng(seed)
    alphabet = list("abcdefghijklmnopqrstuvwxyz0123456789-._=+/~ABCXYZ")
    return ["".join(rng.choice(alphabet, size=int(rng.integers(3, 30)))) + ".com" for _ in range(count)]


def test_save_load_round_trip(tmp_path, vocab):
    params = random_params(HP, seed=8)
    path = tmp_path / "model.bin"
    save(params, HP, vocab, str(path))
    loaded, hp, loaded_vocab = load(str(path))
    assert hp == HP and loaded_vocab == vocab
    for name in TENSOR_NAMES:
        assert getattr(loaded, name).tobytes() == getattr(params, name).tobytes()

    names = _random_names(100, seed=1)
    before = predict_proba(params, names, vocab)
    after = predict_proba(loaded, names, loaded_vocab)
    assert before.tobytes() == after.tobytes()


def test_default_size_model_round_trip(tmp_path, vocab):
    params = random_params(DEFAULT_HYPERPARAMS, seed=2, scale=0.01)
    path = tmp_path / "default.bin"
    save(params, DEFAULT_HYPERPARAMS, vocab, str(path))
    loaded, hp, _ = load(str(path))
    assert hp == DEFAULT_HYPERPARAMS
    assert loaded.size() == 11_425_685
    for name in TENSOR_NAMES:
        assert getattr(loaded, name).tobytes() == getattr(params, name).tobytes()
    names = _random_names(8, seed=4)
    assert predict_proba(loaded, names, vocab).tobytes() == predict_proba(params, names, vocab).tobytes()


def test_serialization_is_deterministic(vocab):
    params = random_params(HP, seed=3)
    assert model_to_bytes(params, HP, vocab) == model_to_bytes(params.copy(), HP, vocab)


def test_file_layout(model_bytes):
    magic, version, header_len = struct.unpack_from("<8sHI", model_bytes)
    assert magic == MAGIC == b"DNSTCNN\x00"
    assert version == 1
    assert model_bytes[14:14 + header_len].startswith(b"{")


def test_truncated_file(model_bytes):
    with pytest.raises(TruncatedModelError):
        model_from_bytes(model_bytes[:-100])
    with pytest.raises(TruncatedModelError):
        model_from_bytes(model_bytes[:5])


def test_flipped_byte_fails_checksum(model_bytes):
    corrupted = bytearray(model_bytes)
    corrupted[-40] ^= 0x01
    with pytest.raises(ChecksumMismatchError):
        model_from_bytes(bytes(corrupted))


def test_header_shape_mismatch(vocab):
    params = random_params(HP, seed=8)
    claimed = HP.model_copy(update={"hn": 7}).model_dump()
    data = pack_model(claimed, list(vocab.symbols), params.tensors())
    with pytest.raises(ShapeMismatchError):
        model_from_bytes(data)


def test_corruption_errors_are_distinct(model_bytes, vocab):
    truncated = model_bytes[:-1]
    flipped = bytearray(model_bytes)
    flipped[-1] ^= 0xFF
    mismatched = pack_model(HP.model_copy(update={"nf": 2}).model_dump(), list(vocab.symbols),
                            random_params(HP, seed=8).tensors())
    raised = []
    for data in (truncated, bytes(flipped), mismatched):
        with pytest.raises(ModelFormatError) as info:
            model_from_bytes(data)
        raised.append(type(info.value))
    assert raised == [TruncatedModelError, ChecksumMismatchError, ShapeMismatchError]


def test_bad_magic_and_version(model_bytes):
    with pytest.raises(BadMagicError):
        model_from_bytes(b"NOTAMODL" + model_bytes[8:])
    bumped = bytearray(model_bytes)
    struct.pack_into("<H", bumped, 8, 2)
    with pytest.raises(UnsupportedVersionError):
        model_from_bytes(bytes(bumped))


def test_trailing_bytes(model_bytes):
    with pytest.raises(ModelFormatError):
        model_from_bytes(model_bytes + b"\x00")


def test_save_rejects_inconsistent_inputs(vocab):
    params = random_params(HP, seed=8)
    with pytest.raises(ShapeMismatchError):
        model_to_bytes(params, HP.model_copy(update={"hn": 7}), vocab)
    with pytest.raises(ShapeMismatchError):
        model_to_bytes(params, HP, Vocabulary(list(vocab.symbols)[:-1]))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load(str(tmp_path / "absent.bin"))
