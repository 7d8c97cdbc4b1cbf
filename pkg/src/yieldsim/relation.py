"""Influencer/reactor relation inference for conflicting agent pairs.

The deterministic oracle labels the agent that reaches the pair's cross
point at the earlier step as the influencer; the other agent yields.
Manual overrides take precedence, and a pluggable predictor interface
lets alternative relation models drive the engine.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Optional, Tuple

from .geometry import CrossPoint, Dims, cross_point

__all__ = [
    "RelationLabel",
    "OverrideRegistry",
    "PairContext",
    "NotInConflictError",
    "infer_relation",
    "oracle_predictor",
    "RelationPredictor",
]


class NotInConflictError(ValueError):
    """Raised when a relation is requested for a pair with no conflict."""


@dataclass(frozen=True)
class RelationLabel:
    influencer: str
    reactor: str
    source: str  # "oracle" | "override" | "predictor"

    def __post_init__(self):
        if self.influencer == self.reactor:
            raise ValueError("influencer and reactor must differ")


@dataclass(frozen=True)
class PairContext:
    """Everything a relation predictor may inspect for one conflicting pair."""

    id_a: str
    id_b: str
    traj_a: object
    traj_b: object
    dims_a: Dims
    dims_b: Dims
    cross: Optional[CrossPoint]


RelationPredictor = Callable[[PairContext], RelationLabel]


class OverrideRegistry:
    """Manual relation overrides, keyed by unordered agent pair.

    Override specs use the CLI syntax "A>B", meaning A influences B.
    """

    def __init__(self):
        self._by_pair: Dict[FrozenSet[str], RelationLabel] = {}

    @staticmethod
    def parse(spec: str) -> Tuple[str, str]:
        parts = spec.split(">")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(
                f"malformed relation override {spec!r}; expected 'A>B'"
            )
        return parts[0].strip(), parts[1].strip()

    def register(self, influencer: str, reactor: str) -> None:
        if influencer == reactor:
            raise ValueError("override must name two distinct agents")
        key = frozenset((influencer, reactor))
        if key in self._by_pair:
            raise ValueError(
                f"duplicate override for pair {sorted(key)}"
            )
        self._by_pair[key] = RelationLabel(influencer, reactor, source="override")

    def add_spec(self, spec: str) -> None:
        influencer, reactor = self.parse(spec)
        self.register(influencer, reactor)

    def lookup(self, id_a: str, id_b: str) -> Optional[RelationLabel]:
        return self._by_pair.get(frozenset((id_a, id_b)))

    def __len__(self) -> int:
        return len(self._by_pair)


def _oracle_label(ctx: PairContext) -> RelationLabel:
    cross = ctx.cross
    if cross is None:
        raise NotInConflictError(
            f"agents {ctx.id_a!r} and {ctx.id_b!r} have no cross point and no collision"
        )
    if cross.index_a != cross.index_b:
        a_first = cross.index_a < cross.index_b
    else:
        # Simultaneous arrival: the faster agent at its cross-point step
        # wins; as a last resort the smaller id does.
        speed_a = ctx.traj_a.states[min(cross.index_a, len(ctx.traj_a) - 1)].speed
        speed_b = ctx.traj_b.states[min(cross.index_b, len(ctx.traj_b) - 1)].speed
        if speed_a != speed_b:
            a_first = speed_a > speed_b
        else:
            a_first = ctx.id_a < ctx.id_b
    if a_first:
        return RelationLabel(ctx.id_a, ctx.id_b, source="oracle")
    return RelationLabel(ctx.id_b, ctx.id_a, source="oracle")


def infer_relation(
    traj_a,
    traj_b,
    id_a: str,
    id_b: str,
    dims_a: Dims,
    dims_b: Dims,
    overrides: Optional[OverrideRegistry] = None,
) -> RelationLabel:
    """Label the pair's influencer and reactor.

    An override for the pair wins outright. Otherwise the agent arriving
    at the cross point at the earlier step index is the influencer.
    The result is identical under argument swap.
    """
    if overrides is not None:
        hit = overrides.lookup(id_a, id_b)
        if hit is not None:
            return hit
    # Canonical order keeps the label independent of argument order.
    if id_b < id_a:
        return infer_relation(traj_b, traj_a, id_b, id_a, dims_b, dims_a, None)
    cross = cross_point(traj_a, traj_b, dims_a, dims_b)
    ctx = PairContext(id_a, id_b, traj_a, traj_b, dims_a, dims_b, cross)
    return _oracle_label(ctx)


def oracle_predictor(ctx: PairContext) -> RelationLabel:
    """Default relation predictor: the cross-point arrival oracle."""
    if ctx.id_b < ctx.id_a:
        flipped = PairContext(
            ctx.id_b, ctx.id_a, ctx.traj_b, ctx.traj_a,
            ctx.dims_b, ctx.dims_a, _flip_cross(ctx.cross),
        )
        return _oracle_label(flipped)
    return _oracle_label(ctx)


def _flip_cross(cross: Optional[CrossPoint]) -> Optional[CrossPoint]:
    if cross is None:
        return None
    return CrossPoint(cross.point, cross.index_b, cross.index_a, cross.kind)
