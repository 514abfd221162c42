"""Versioned binary model files.

Layout (all integers little-endian)::

    magic        8 bytes   b"DNSTCNN\\0"
    version      uint16    1
    header_len   uint32    length of the JSON header in bytes
    header       UTF-8     canonical JSON: hyperparams, vocabulary symbols, tensor names and shapes
    tensors      float64   one block per tensor, in header order, C order
    digest       32 bytes  SHA-256 over every preceding byte
"""

import hashlib
import json
import struct
from typing import Dict, List, Tuple

import numpy as np

from src.config import logger
from src.errors import (
    BadMagicError,
    ChecksumMismatchError,
    ModelFormatError,
    ShapeMismatchError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from src.neuralnet import TENSOR_NAMES, Hyperparams, ModelParams, tensor_shapes
from src.tokenizer import Vocabulary
from src.training import count_parameters

MAGIC = b"DNSTCNN\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")
_DIGEST_SIZE = hashlib.sha256().digest_size
_FLOAT = np.dtype("<f8")


def pack_model(hp_fields: Dict[str, int], symbols: List[str],
               tensors: Dict[str, np.ndarray]) -> bytes:
    """Serialize raw parts without consistency checks (``save`` does those)."""
    header = {
        "hyperparams": hp_fields,
        "vocabulary": list(symbols),
        "tensors": [{"name": name, "shape": list(np.shape(array))} for name, array in tensors.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
    body += header_bytes
    for array in tensors.values():
        body += np.ascontiguousarray(array, dtype=_FLOAT).tobytes()
    return bytes(body) + hashlib.sha256(body).digest()


def model_to_bytes(params: ModelParams, hp: Hyperparams, vocab: Vocabulary) -> bytes:
    if params.hp != hp:
        raise ShapeMismatchError(f"parameters were built for {params.hp.as_line()}, not {hp.as_line()}")
    if params.vocab_size != len(vocab):
        raise ShapeMismatchError(f"embedding has {params.vocab_size} rows for a vocabulary of {len(vocab)}")
    return pack_model(hp.model_dump(), list(vocab.symbols), params.tensors())


def save(params: ModelParams, hp: Hyperparams, vocab: Vocabulary, path: str) -> None:
    data = model_to_bytes(params, hp, vocab)
    with open(path, "wb") as f:
        f.write(data)
    logger.info(f"Saved model ({params.size()} parameters) to {path}")


def model_from_bytes(data: bytes) -> Tuple[ModelParams, Hyperparams, Vocabulary]:
    if len(data) < _PREFIX.size:
        raise TruncatedModelError(f"model file holds {len(data)} bytes, shorter than its preamble")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"unrecognised magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"model format version {version}, expected {FORMAT_VERSION}")
    header_end = _PREFIX.size + header_len
    if len(data) < header_end:
        raise TruncatedModelError("model file ends inside its header")
    try:
        header = json.loads(data[_PREFIX.size:header_end].decode("utf-8"))
        shapes = [(t["name"], tuple(int(n) for n in t["shape"])) for t in header["tensors"]]
    except (ValueError, KeyError, TypeError) as ex:
        raise ModelFormatError(f"unreadable model header: {ex}") from ex

    payload = sum(int(np.prod(shape)) for _, shape in shapes) * _FLOAT.itemsize
    expected = header_end + payload + _DIGEST_SIZE
    if len(data) < expected:
        raise TruncatedModelError(f"model file holds {len(data)} bytes, header declares {expected}")
    if len(data) > expected:
        raise ModelFormatError(f"{len(data) - expected} unexpected trailing bytes")
    if hashlib.sha256(data[:-_DIGEST_SIZE]).digest() != data[-_DIGEST_SIZE:]:
        raise ChecksumMismatchError("model checksum does not match its contents")

    try:
        hp = Hyperparams(**header["hyperparams"])
        vocab = Vocabulary(header["vocabulary"])
    except (ValueError, KeyError, TypeError) as ex:
        raise ModelFormatError(f"invalid model header: {ex}") from ex

    declared = dict(shapes)
    required = tensor_shapes(hp, len(vocab))
    if [name for name, _ in shapes] != list(TENSOR_NAMES) or declared != required:
        raise ShapeMismatchError(f"tensor shapes {declared} do not match {hp.as_line()} "
                                 f"with vocabulary {len(vocab)}")
    if sum(int(np.prod(s)) for s in declared.values()) != count_parameters(hp, len(vocab)):
        raise ShapeMismatchError("declared tensors disagree with the parameter count")

    arrays = {}
    offset = header_end
    for name, shape in shapes:
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += count * _FLOAT.itemsize
    return ModelParams(hp=hp, **arrays), hp, vocab


def load(path: str) -> Tuple[ModelParams, Hyperparams, Vocabulary]:
    with open(path, "rb") as f:
        data = f.read()
    params, hp, vocab = model_from_bytes(data)
    logger.info(f"Loaded model {hp.as_line()} from {path}")
    return params, hp, vocab
