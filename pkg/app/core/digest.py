"""
Digest Module for DroopPlan
Content hashes used to key graph caches to the inputs they were built from
"""

import json
from typing import Any

from cryptography.hazmat.primitives import hashes


def canonical_json(data: Any) -> str:
    """Stable JSON text: sorted keys, no whitespace, floats in repr form"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def hash_for_verification(data: str) -> str:
    """SHA-256 hex digest (identity check, not security)"""
    h = hashes.Hash(hashes.SHA256())
    h.update(data.encode())
    return h.finalize().hex()


def content_hash(data: Any) -> str:
    return hash_for_verification(canonical_json(data))
