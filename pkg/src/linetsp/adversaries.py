"""Adaptive release strategies that watch the agent and time requests to hurt it.

Each attack is an event source for :mod:`.engine`: it answers segment queries
with the next release, deciding release times from the agent's own motion.
The evenly-spaced families place ``rank_n`` requests on [-1, 1] and run in two
phases: a benign phase-one schedule (distance d released at 2 - d) that lasts
while the agent stays strictly inside a shrinking interval of unreleased
requests, and a punitive phase two entered the first instant the predicate
fails (the commit), which delays the exit side's remaining releases.  Commit
detection is exact: boundary crossings are solved in closed form on each
queried segment, and interval shrinks are re-checked at every release instant.

The classic two- and three-request strategies from the no-prediction setting
are included for calibrating the wait-and-copy baseline.

Constructed sources carry ``.predictions`` (what the attacked algorithm may
see), ``.variant`` (how the realized instance is priced), and ``.state``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .core import (
    Instance,
    PredictionSet,
    Request,
    SimResult,
    ValidationError,
    Variant,
)
from .engine import (
    HORIZON,
    Event,
    SegmentQuery,
    UpdateFn,
    check_invariants,
    competitive_ratio,
    simulate_with_transcript,
    transcript_to_instance,
)
from .oracle import OracleResult, opt_dp

RHO = (9.0 + math.sqrt(17.0)) / 8.0
_NEAR_EDGE = 2.0 * RHO - 3.0  # half-width of the window watched at t = 1
_FAR_EDGE = 7.0 - 4.0 * RHO  # half-width of the window watched at t = 3

_ORIGIN_LABEL = 0


def evenly_spaced(rank_n: int) -> tuple[float, ...]:
    """``rank_n`` positions spanning [-1, 1] with exact endpoints, and an exact
    0.0 member when the count is odd."""
    if rank_n < 2:
        raise ValidationError(f"need at least 2 evenly spaced requests, got {rank_n}")
    m = rank_n - 1
    return tuple((2 * i - m) / m for i in range(rank_n))


@dataclass
class AttackState:
    """Mutable bookkeeping for the evenly-spaced families."""

    phase: int  # 1 while the benign schedule runs, 2 after the commit
    rank_n: int
    alpha: float
    committed_side: Optional[str] = None  # "left" | "right"
    t_commit: Optional[float] = None
    released: set[int] = field(default_factory=set)
    # label -> (position, currently scheduled release time)
    pending: dict[int, tuple[float, float]] = field(default_factory=dict)


class _LocationsAttack:
    """Shared two-phase release engine for the evenly-spaced families."""

    def __init__(
        self,
        rank_n: int,
        closed_rules: bool,
        variant: Variant,
        late_origin_extra: bool = False,
    ) -> None:
        positions = evenly_spaced(rank_n)
        self.closed_rules = closed_rules
        self.variant = variant
        self._members = frozenset(range(1, rank_n + 1))
        self._extra = rank_n + 1 if late_origin_extra else None

        pending: dict[int, tuple[float, float]] = {_ORIGIN_LABEL: (0.0, 0.0)}
        preds: dict[int, float] = {_ORIGIN_LABEL: 0.0}
        for i, q in enumerate(positions, start=1):
            pending[i] = (q, 2.0 - abs(q))
            preds[i] = q
        if self._extra is not None:
            pending[self._extra] = (0.0, 4.0)
            preds[self._extra] = 0.0

        self.state = AttackState(
            phase=1, rank_n=rank_n, alpha=2.0 / (rank_n - 1), pending=pending
        )
        self.n_requests = len(pending)
        self.predictions = PredictionSet(preds, final_label=self._extra)

    # -- predicate machinery ------------------------------------------------

    def _bounds(self, t: float) -> tuple[float, float]:
        """The open interval the agent must stay in, from strictly-future
        unreleased members."""
        unrel = [
            pos
            for label, (pos, sched) in self.state.pending.items()
            if label in self._members and sched > t
        ]
        if self.closed_rules:
            return min([*unrel, 0.0]), max([*unrel, 0.0])
        left = min([*unrel, 1.0])  # an exhausted side forces failure
        right = max([*unrel, -1.0])
        return 3.0 * left + 2.0, 3.0 * right - 2.0

    @staticmethod
    def _first_failure(
        tau: float, end: float, t0: float, x0: float, v: float, lo: float, hi: float
    ) -> Optional[float]:
        """Earliest s in [tau, end] with pos(s) outside the open (lo, hi)."""
        p = x0 + v * (tau - t0)
        if p <= lo or p >= hi:
            return tau
        if v > 0.0:
            s = t0 + (hi - x0) / v
            return s if s <= end else None
        if v < 0.0:
            s = t0 + (lo - x0) / v
            return s if s <= end else None
        return None

    def _commit(self, t: float, pos: float) -> None:
        lo, hi = self._bounds(t)
        side = "left" if pos <= lo and pos < hi else "right"
        st = self.state
        st.phase = 2
        st.t_commit = t
        st.committed_side = side
        for label in self._members:
            q, sched = st.pending[label]
            if sched <= t:
                continue
            on_committed = (q < 0.0) if side == "left" else (q > 0.0)
            if q == 0.0:
                on_committed = True  # the boundary member sides with the commit
            d = abs(q)
            if on_committed:
                st.pending[label] = (q, 4.0 - d if self.closed_rules else 2.0 + d)

    # -- event source protocol ----------------------------------------------

    def next_event(self, segment: SegmentQuery) -> Optional[Event]:
        t0, x0, v, t1 = segment
        st = self.state
        tau = t0
        for _ in range(self.n_requests + 2):
            waiting = {l: s for l, (_, s) in st.pending.items() if l not in st.released}
            r_star = min(waiting.values()) if waiting else None
            if st.phase == 1:
                lo, hi = self._bounds(tau)
                end = t1 if r_star is None else min(r_star, t1)
                s = self._first_failure(tau, end, t0, x0, v, lo, hi)
                if s is not None and (r_star is None or s < r_star):
                    self._commit(s, x0 + v * (s - t0))
                    tau = s
                    continue
            if r_star is None or r_star > t1:
                return None
            batch = [
                Request(label, st.pending[label][0], r_star)
                for label in sorted(waiting)
                if waiting[label] == r_star
            ]
            st.released.update(r.label for r in batch)
            if st.phase == 1:
                pos = x0 + v * (r_star - t0)
                lo, hi = self._bounds(r_star)
                if not (lo < pos < hi):
                    self._commit(r_star, pos)
            return (r_star, batch)
        raise AssertionError("release scan failed to converge")


def closed_locations_attack(rank_n: int) -> _LocationsAttack:
    """Evenly spaced requests, closed variant; commit delays the exit side to
    4 - d.  Realized instances always price to an optimum of 4."""
    return _LocationsAttack(rank_n, closed_rules=True, variant=Variant.CLOSED)


def open_locations_attack(rank_n: int) -> _LocationsAttack:
    """Evenly spaced requests, open variant; the guard interval is
    (3L + 2, 3R - 2) and the exit side is delayed to 2 + d (optimum 3)."""
    return _LocationsAttack(rank_n, closed_rules=False, variant=Variant.OPEN)


def open_lf_attack(rank_n: int) -> _LocationsAttack:
    """The closed-rule releases evaluated as an open instance, plus one extra
    origin request released at t = 4.  The extra request ends some optimal
    schedule, so naming it as the predicted finisher carries zero error."""
    return _LocationsAttack(
        rank_n, closed_rules=True, variant=Variant.OPEN, late_origin_extra=True
    )


class _ClassicClosedAttack:
    """Three-request adaptive strategy for the closed variant, no predictions.

    Watches the agent at t = 1 and t = 3 and, in the drawn-out branch, at its
    first origin crossing after t = 3; pads short branches to exactly three
    requests so the total count carries no information.
    """

    n_requests = 4  # origin + exactly three attack requests
    variant = Variant.CLOSED
    predictions = None

    def __init__(self) -> None:
        self._stage = "origin"
        self._visited = {1.0: False, -1.0: False}
        self._sign3 = 0.0

    def _note_visits(self, t0: float, x0: float, v: float, te: float) -> None:
        """Track whether the agent has touched an extreme since its release."""
        for target in (1.0, -1.0):
            if self._visited[target]:
                continue
            if v == 0.0:
                hit = x0 == target and te >= 1.0
            else:
                s = t0 + (target - x0) / v
                hit = t0 <= s <= te and s >= 1.0
            if hit:
                self._visited[target] = True

    def next_event(self, segment: SegmentQuery) -> Optional[Event]:
        t0, x0, v, t1 = segment
        if self._stage == "origin":
            self._stage = "pre1"
            return (0.0, [Request(_ORIGIN_LABEL, 0.0, 0.0)])

        if self._stage == "pre1":
            if t1 < 1.0:
                return None
            pos1 = x0 + v * (1.0 - t0)
            self._note_visits(t0, x0, v, 1.0)
            if abs(pos1) > _NEAR_EDGE:
                w = -1.0 if pos1 > 0.0 else 1.0  # the extreme behind the agent
                self._stage = "done"
                return (
                    1.0,
                    [
                        Request(1, w, 1.0),
                        Request(2, w / 3.0, 1.0),
                        Request(3, 2.0 * w / 3.0, 1.0),
                    ],
                )
            self._stage = "pre3"
            return (1.0, [Request(1, -1.0, 1.0), Request(2, 1.0, 1.0)])

        if self._stage == "pre3":
            if t1 < 3.0:
                self._note_visits(t0, x0, v, t1)
                return None
            pos3 = x0 + v * (3.0 - t0)
            self._note_visits(t0, x0, v, 3.0)
            if abs(pos3) <= _FAR_EDGE:
                # re-dirty whichever extreme the agent already cleared
                w = 1.0 if self._visited[1.0] or not self._visited[-1.0] else -1.0
                self._stage = "done"
                return (3.0, [Request(3, w, 3.0)])
            self._sign3 = 1.0 if pos3 > 0.0 else -1.0
            self._stage = "crossing"
            # fall through: the crossing may happen within this very segment

        if self._stage == "crossing":
            start = max(t0, 3.0)
            if v == 0.0:
                s = start if x0 == 0.0 and t1 >= start else None
            else:
                s = t0 - x0 / v
                if not (t0 <= s <= t1 and s >= 3.0):
                    s = None
            if s is None:
                return None
            self._stage = "done"
            return (s, [Request(3, self._sign3 * (1.0 + (s - 3.0)), s)])

        return None


class _ClassicOpenAttack:
    """One request at the extreme opposite the agent's side at t = 1."""

    n_requests = 2
    variant = Variant.OPEN
    predictions = None

    def __init__(self) -> None:
        self._stage = "origin"

    def next_event(self, segment: SegmentQuery) -> Optional[Event]:
        t0, x0, v, t1 = segment
        if self._stage == "origin":
            self._stage = "pre1"
            return (0.0, [Request(_ORIGIN_LABEL, 0.0, 0.0)])
        if self._stage == "pre1" and t1 >= 1.0:
            pos1 = x0 + v * (1.0 - t0)
            self._stage = "done"
            return (1.0, [Request(1, 1.0 if pos1 <= 0.0 else -1.0, 1.0)])
        return None


def classic_closed_attack() -> _ClassicClosedAttack:
    return _ClassicClosedAttack()


def classic_open_attack() -> _ClassicOpenAttack:
    return _ClassicOpenAttack()


ATTACK_FAMILIES = {
    "fc": closed_locations_attack,
    "fo": open_locations_attack,
    "flf": open_lf_attack,
    "classic-closed": classic_closed_attack,
    "classic-open": classic_open_attack,
}

_RANKED = frozenset({"fc", "fo", "flf"})


def family_lower_bound(family: str, alpha: float = 0.0) -> float:
    """Ratio every algorithm is forced to at least, for the given spacing."""
    if family == "fc":
        return (6.0 - 2.0 * alpha) / 4.0
    if family == "fo":
        return (13.0 / 3.0 - 3.0 * alpha) / 3.0
    if family == "flf":
        return (5.0 - 2.0 * alpha) / 4.0
    if family == "classic-closed":
        return 1.60
    if family == "classic-open":
        return 2.0
    raise ValidationError(f"unknown attack family {family!r}")


def make_attack(family: str, rank_n: Optional[int] = None):
    try:
        ctor = ATTACK_FAMILIES[family]
    except KeyError:
        choices = ", ".join(sorted(ATTACK_FAMILIES))
        raise ValidationError(f"unknown attack family {family!r} (choices: {choices})")
    if family in _RANKED:
        if rank_n is None:
            raise ValidationError(f"attack family {family!r} needs a request count")
        return ctor(rank_n)
    return ctor()


@dataclass(frozen=True)
class AttackOutcome:
    ratio: float
    sim: SimResult
    instance: Instance  # the realized releases, frozen
    oracle: OracleResult
    source: object  # the attack, with its post-run state


def run_attack(
    family: str,
    algorithm: Union[str, UpdateFn],
    rank_n: Optional[int] = None,
    horizon: float = HORIZON,
    check: bool = True,
) -> AttackOutcome:
    """Simulate one attack, freeze its transcript, and price it offline."""
    source = make_attack(family, rank_n)
    sim, transcript = simulate_with_transcript(
        source, algorithm, source.predictions, source.variant, horizon
    )
    instance = transcript_to_instance(transcript, source.variant, source.predictions)
    oracle = opt_dp(instance)
    if check:
        check_invariants(sim, instance)
    return AttackOutcome(competitive_ratio(sim, oracle), sim, instance, oracle, source)
