"""Metaverse task taxonomy and the placement policies under comparison.

Placement is a pure function: given a task (whose region was fixed at
creation time), the owner's position in the topology tree and the active
policy, it always returns the same node. CloudOnly sends everything to the
cloud; FogEdge keeps avatar tasks at the owner's home fog, social and
transaction-validation tasks at the edge server of the region where the
avatar currently is, and universe simulation at the cloud.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

from .errors import ConfigError
from .infrastructure import Topology

SYSTEM_OWNER = -1  # owner of world-level tasks (universe simulation)


class TaskKind(IntEnum):
    SPATIAL_NAVIGATION = 0
    COLLISION_DETECTION = 1
    SOCIAL_INTERACTION = 2
    TRANSACTION_VALIDATION = 3
    UNIVERSE_SIMULATION = 4


KIND_LABELS = {
    TaskKind.SPATIAL_NAVIGATION: "spatial_navigation",
    TaskKind.COLLISION_DETECTION: "collision_detection",
    TaskKind.SOCIAL_INTERACTION: "social_interaction",
    TaskKind.TRANSACTION_VALIDATION: "transaction_validation",
    TaskKind.UNIVERSE_SIMULATION: "universe_simulation",
}

KIND_LABEL_LIST = [KIND_LABELS[k] for k in TaskKind]


class Policy(str, Enum):
    CLOUD_ONLY = "cloudonly"
    FOG_EDGE = "fogedge"

    @staticmethod
    def parse(name: str) -> "Policy":
        lowered = name.strip().lower()
        if lowered in ("cloud", "cloudonly", "cloud-only"):
            return Policy.CLOUD_ONLY
        if lowered in ("fogedge", "fog-edge"):
            return Policy.FOG_EDGE
        raise ConfigError(f"unknown policy {name!r} (expected cloud or fogedge)")


@dataclass(frozen=True)
class Task:
    task_id: int
    kind: TaskKind
    owner: int
    length_mi: int | float
    upload_bytes: int
    download_bytes: int
    created_us: int
    region: tuple[int, int] | None = None  # owner's region when the task was created

    def __post_init__(self):
        if self.length_mi <= 0:
            raise ConfigError(f"task {self.task_id}: length must be > 0")
        if self.upload_bytes < 0 or self.download_bytes < 0:
            raise ConfigError(f"task {self.task_id}: payloads must be >= 0")


@dataclass(frozen=True)
class TaskProfile:
    kind: TaskKind
    base_length_mi: int
    upload_bytes: int
    download_bytes: int
    per_neighbor_mi: int = 0  # collision detection only


def collision_length_mi(profile: TaskProfile, candidates: int) -> int:
    return profile.base_length_mi + profile.per_neighbor_mi * candidates


def place(task: Task, policy: Policy, topo: Topology, home_fog: str | None = None) -> str:
    """Node that executes a task under the given policy.

    home_fog is the owner's home fog id; required under FogEdge for avatar
    tasks. Region-bound kinds use the edge server of task.region.
    """
    if policy is Policy.CLOUD_ONLY:
        return topo.cloud_id
    kind = task.kind
    if kind in (TaskKind.SPATIAL_NAVIGATION, TaskKind.COLLISION_DETECTION):
        if home_fog is None:
            raise ConfigError(f"task {task.task_id}: owner {task.owner} has no home fog")
        return home_fog
    if kind in (TaskKind.SOCIAL_INTERACTION, TaskKind.TRANSACTION_VALIDATION):
        if task.region is None:
            raise ConfigError(f"task {task.task_id}: region-bound task carries no region")
        return topo.edge_of_region(task.region, task.owner)
    return topo.cloud_id  # universe simulation
