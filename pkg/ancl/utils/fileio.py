"""Atomic file writing helpers."""

import os
import tempfile
from pathlib import Path


def atomic_write_bytes(path: Path, payload: bytes):
    """Writes bytes to ``path`` via a temp file in the same directory and a rename.

    Args:
        path: Destination file
        payload: Bytes to write
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: Path, text: str):
    """Writes UTF-8 text atomically."""
    atomic_write_bytes(path, text.encode('utf-8'))
