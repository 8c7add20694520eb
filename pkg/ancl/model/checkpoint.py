"""Versioned binary checkpoints.

Layout (little-endian throughout)::

    b"ANCL"            magic
    u16                format version
    u32                metadata length in bytes
    metadata           UTF-8 JSON: configs, epoch, RNG state, optimizer
                       scalars and the array manifest (names and shapes)
    per array          u64 element count, then float64 values
    u32                CRC32 of every preceding byte

Arrays follow the manifest order: parameters in layer order, then the
Adam first moments, then the second moments.
"""

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ancl.config import EncoderConfig, TrainConfig
from ancl.errors import CheckpointIOError, CorruptFileError, VersionMismatchError
from ancl.model.optimizer import AdamState
from ancl.utils.fileio import atomic_write_bytes
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b'ANCL'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sHI')
_COUNT = struct.Struct('<Q')
_CRC = struct.Struct('<I')


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """Immutable training snapshot."""

    encoder: EncoderConfig
    train: TrainConfig
    epoch: int
    params: dict[str, np.ndarray]
    optimizer: AdamState
    rng_state: dict[str, Any]
    version: int = FORMAT_VERSION

    def rng(self) -> np.random.Generator:
        """Generator restored to the saved state."""
        generator = np.random.default_rng()
        generator.bit_generator.state = self.rng_state
        return generator

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return (
            self.version == other.version
            and self.encoder == other.encoder
            and self.train == other.train
            and self.epoch == other.epoch
            and self.rng_state == other.rng_state
            and list(self.params) == list(other.params)
            and all(
                self.params[k].shape == other.params[k].shape
                and self.params[k].tobytes() == other.params[k].tobytes()
                for k in self.params
            )
            and self.optimizer.equals(other.optimizer)
        )

    __hash__ = None


def _arrays(checkpoint: Checkpoint) -> list[tuple[str, np.ndarray]]:
    arrays = list(checkpoint.params.items())
    arrays += [(f'adam.m.{k}', v) for k, v in checkpoint.optimizer.m.items()]
    arrays += [(f'adam.v.{k}', v) for k, v in checkpoint.optimizer.v.items()]
    return arrays


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Serializes a checkpoint to bytes."""
    arrays = _arrays(checkpoint)
    meta = {
        'encoder': checkpoint.encoder.model_dump(mode='json'),
        'train': checkpoint.train.model_dump(mode='json'),
        'epoch': checkpoint.epoch,
        'rng_state': checkpoint.rng_state,
        'optimizer': {
            'step': checkpoint.optimizer.step,
            'beta1': checkpoint.optimizer.beta1,
            'beta2': checkpoint.optimizer.beta2,
            'eps': checkpoint.optimizer.eps,
            'params': list(checkpoint.optimizer.m),
        },
        'arrays': [{'name': name, 'shape': list(value.shape)} for name, value in arrays],
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode('utf-8')

    parts = [_HEADER.pack(MAGIC, checkpoint.version, len(meta_bytes)), meta_bytes]
    for _, value in arrays:
        data = np.ascontiguousarray(value, dtype='<f8')
        parts.append(_COUNT.pack(data.size))
        parts.append(data.tobytes())
    body = b''.join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def decode_checkpoint(payload: bytes, source: str = '<bytes>') -> Checkpoint:
    """Parses checkpoint bytes.

    Raises:
        CorruptFileError: bad magic, truncated data or checksum mismatch
        VersionMismatchError: unsupported format version
    """
    if len(payload) < _HEADER.size:
        raise CorruptFileError(f"{source}: truncated header")
    magic, version, meta_length = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CorruptFileError(f"{source}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{source}: format version {version}, expected {FORMAT_VERSION}")
    if len(payload) < _HEADER.size + meta_length + _CRC.size:
        raise CorruptFileError(f"{source}: truncated file")
    body, trailer = payload[:-_CRC.size], payload[-_CRC.size:]
    if zlib.crc32(body) != _CRC.unpack(trailer)[0]:
        raise CorruptFileError(f"{source}: checksum mismatch")

    offset = _HEADER.size
    try:
        meta = json.loads(body[offset:offset + meta_length].decode('utf-8'))
        offset += meta_length
        arrays: dict[str, np.ndarray] = {}
        for entry in meta['arrays']:
            shape = tuple(entry['shape'])
            (count,) = _COUNT.unpack_from(body, offset)
            offset += _COUNT.size
            if count != int(np.prod(shape, dtype=np.int64)) or offset + 8 * count > len(body):
                raise CorruptFileError(f"{source}: array {entry['name']} has inconsistent length")
            data = np.frombuffer(body, dtype='<f8', count=count, offset=offset)
            arrays[entry['name']] = data.astype(np.float64).reshape(shape)
            offset += 8 * count
        if offset != len(body):
            raise CorruptFileError(f"{source}: {len(body) - offset} trailing bytes")

        names = meta['optimizer']['params']
        optimizer = AdamState(
            step=meta['optimizer']['step'],
            m={k: arrays[f'adam.m.{k}'] for k in names},
            v={k: arrays[f'adam.v.{k}'] for k in names},
            beta1=meta['optimizer']['beta1'],
            beta2=meta['optimizer']['beta2'],
            eps=meta['optimizer']['eps'],
        )
        params = {k: v for k, v in arrays.items() if not k.startswith('adam.')}
        return Checkpoint(
            encoder=EncoderConfig(**meta['encoder']),
            train=TrainConfig(**meta['train']),
            epoch=meta['epoch'],
            params=params,
            optimizer=optimizer,
            rng_state=meta['rng_state'],
            version=version,
        )
    except (KeyError, TypeError, ValueError, struct.error) as e:
        raise CorruptFileError(f"{source}: malformed checkpoint ({e})") from None


def save_checkpoint(checkpoint: Checkpoint, path: Path):
    """Writes a checkpoint atomically."""
    path = Path(path)
    try:
        atomic_write_bytes(path, encode_checkpoint(checkpoint))
    except OSError as e:
        raise CheckpointIOError(f"cannot write checkpoint {path}: {e}") from None
    logger.info(f"Saved checkpoint {path} (epoch {checkpoint.epoch})")


def load_checkpoint(path: Path) -> Checkpoint:
    """Reads and validates a checkpoint file."""
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise CheckpointIOError(f"cannot read checkpoint {path}: {e}") from None
    checkpoint = decode_checkpoint(payload, str(path))
    logger.debug(f"Loaded checkpoint {path} (epoch {checkpoint.epoch})")
    return checkpoint
