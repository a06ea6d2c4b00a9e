"""
Storage Module for DroopPlan
Atomic file writes so a failed command never leaves partial artifacts behind
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Union

from app.core.errors import IoError

logger = logging.getLogger(__name__)

Payload = Union[bytes, str]


def _encode(data: Payload) -> bytes:
    return data.encode("utf-8") if isinstance(data, str) else data


def _stage(target: Path, data: Payload) -> str:
    """Write data to a synced temp file next to target and return its path"""
    temp_fd, temp_path = tempfile.mkstemp(dir=target.parent, prefix=".droopplan_temp_", suffix=target.suffix)
    try:
        with os.fdopen(temp_fd, "wb") as f:
            f.write(_encode(data))
            f.flush()
            os.fsync(f.fileno())
    except Exception:
        _discard(temp_path)
        raise
    return temp_path


def _discard(temp_path: str):
    try:
        os.unlink(temp_path)
    except OSError:
        pass


def atomic_write(path: Union[str, Path], data: Payload):
    """Atomically replace path with data (temp file + rename)"""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        temp_path = _stage(target, data)
        os.replace(temp_path, target)
    except OSError as e:
        raise IoError(f"cannot write {target}: {e.strerror or e}") from e


def write_all(directory: Union[str, Path], files: Dict[str, Payload]):
    """Stage every file first, then rename them into place; nothing lands if staging fails"""
    root = Path(directory)
    staged = []
    try:
        root.mkdir(parents=True, exist_ok=True)
        for name in sorted(files):
            target = root / name
            staged.append((_stage(target, files[name]), target))
    except OSError as e:
        for temp_path, _ in staged:
            _discard(temp_path)
        raise IoError(f"cannot write to {root}: {e.strerror or e}") from e

    placed = []
    try:
        for temp_path, target in staged:
            os.replace(temp_path, target)
            placed.append(target)
    except OSError as e:
        failed = staged[len(placed)][1]
        for temp_path, _ in staged[len(placed):]:
            _discard(temp_path)
        for done in placed:
            _discard(str(done))
        raise IoError(f"cannot write {failed}: {e.strerror or e}") from e
    logger.debug("wrote %d files to %s", len(staged), root)


def read_text(path: Union[str, Path], what: str = "file") -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {what} {path}: {e.strerror or e}") from e
