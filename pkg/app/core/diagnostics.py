"""
Diagnostics Module for DroopPlan
Gathers one-time warnings raised while building or planning (grasps that are
never feasible, disconnected graph parts, skipped outputs) so commands can
report them once on the error stream and in the plan summary.
"""

import logging
from typing import List

logger = logging.getLogger(__name__)


class Diagnostics:
    def __init__(self):
        self._warnings: List[str] = []
        self._warned = set()

    def warn_once(self, key: str, message: str):
        if key in self._warned:
            return
        self._warned.add(key)
        self._warnings.append(message)
        logger.warning(message)

    def get_warnings(self) -> List[str]:
        return list(self._warnings)

    def reset(self):
        self._warnings.clear()
        self._warned.clear()


# module-level singleton
_diagnostics = Diagnostics()


def get_diagnostics() -> Diagnostics:
    return _diagnostics
