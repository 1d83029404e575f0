from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class SimConfig:
    """Match and team parameters.

    The first block drives the step engine; the second block tunes the
    jason-dtu planner (clustering, formation geometry, scouting cutoffs,
    role switching).
    """

    steps: int = 400
    agents_per_team: int = 6
    agent_visibility: int = 8
    cow_visibility: int = 6
    cow_jitter: float = 0.1
    deadline_ms: int = 2000
    seed: int = 0

    cluster_link_radius: int = 3
    formation_standoff: float = 3.0
    formation_spread: float = 30.0
    group_size: int = 3
    hysteresis: int = 2
    scout_known_fraction: float = 0.5
    scout_step_cutoff: int = 40
    scout_to_herder: bool = True
    disruptor: bool = True

    def __post_init__(self) -> None:
        for name in ("agents_per_team", "group_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        for name in ("agent_visibility", "cow_visibility", "cluster_link_radius"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.formation_standoff < 1:
            raise ValueError("formation_standoff must be >= 1")
        if self.cow_jitter < 0:
            raise ValueError("cow_jitter must be >= 0")
        if not 0 < self.formation_spread <= 90:
            raise ValueError("formation_spread must be in (0, 90]")
        if self.deadline_ms < 1:
            raise ValueError("deadline_ms must be >= 1")
        if self.hysteresis < 0:
            raise ValueError("hysteresis must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SimConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})
