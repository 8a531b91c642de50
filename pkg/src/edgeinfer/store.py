"""Directory-backed plan store keyed by content hash."""

from __future__ import annotations

import threading
from pathlib import Path

from .core import EdgeInferError, ErrorCode
from .plan import ModelPlan, deserialize_plan, serialize_plan

PLAN_SUFFIX = ".plan"


class PlanStore:
    """Loads ``*.plan`` files from a directory; rescans on a miss so newly
    deployed plans are picked up without a restart."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise EdgeInferError(
                ErrorCode.MODEL_NOT_FOUND, f"plan store '{self.directory}' is not a directory"
            )
        self._plans: dict[bytes, ModelPlan] = {}
        self._lock = threading.Lock()
        self.rescan()

    def rescan(self):
        with self._lock:
            for path in sorted(self.directory.glob(f"*{PLAN_SUFFIX}")):
                try:
                    plan = deserialize_plan(path.read_bytes())
                except (EdgeInferError, OSError):
                    continue  # skip corrupt or half-written files
                self._plans[plan.plan_hash] = plan

    def get(self, plan_hash: bytes) -> ModelPlan:
        with self._lock:
            plan = self._plans.get(plan_hash)
        if plan is None:
            self.rescan()
            with self._lock:
                plan = self._plans.get(plan_hash)
        if plan is None:
            raise EdgeInferError(
                ErrorCode.MODEL_NOT_FOUND, f"no plan {plan_hash.hex()} in {self.directory}"
            )
        return plan

    def hashes(self) -> list[bytes]:
        with self._lock:
            return sorted(self._plans)

    def __contains__(self, plan_hash: bytes) -> bool:
        try:
            self.get(plan_hash)
            return True
        except EdgeInferError:
            return False


def save_plan(plan: ModelPlan, directory: str | Path, name: str | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fname = (name or plan.hash_hex[:16]) + PLAN_SUFFIX
    path = directory / fname
    path.write_bytes(serialize_plan(plan))
    return path
