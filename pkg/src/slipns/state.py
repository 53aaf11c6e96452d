"""Solution containers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

from .errors import ParityError
from .spectral import EVEN, ScalarField, VectorField


@dataclass(frozen=True, eq=False)
class FlowState:
    """Density and velocity at time ``t``.

    ``p`` is the last computed pressure, kept only as a warm start for the
    next pressure solve; it never changes the solution.
    """

    t: float
    rho: ScalarField
    u: VectorField
    p: ScalarField | None = None

    def __post_init__(self) -> None:
        if self.rho.parity is not EVEN:
            raise ParityError("density must be an even field")

    @property
    def domain(self):
        return self.rho.domain

    def with_time(self, t: float) -> "FlowState":
        return replace(self, t=t)


@dataclass
class Trajectory:
    """Snapshots of one run plus its per-step log.

    ``failure`` is set when the run aborted; ``states`` then holds the
    snapshots reached before the abort.
    """

    states: list[FlowState] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    failure: str | None = None
    failure_kind: str | None = None
    warnings: list[str] = field(default_factory=list)

    def __iter__(self) -> Iterator[FlowState]:
        return iter(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.states]
