"""Domain types, instance normalization, and makespan semantics.

Everything downstream (oracle, algorithms, engine, adversaries, experiments)
works in terms of the types defined here.  Positions and times are plain 64-bit
floats; wherever two quantities are compared for equality the absolute
tolerance ``TOL`` applies.  Event times are always computed in closed form from
linear segment equations, never by time-stepping.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional

TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an instance or trajectory violates a structural invariant."""


class IncompleteTrajectoryError(RuntimeError):
    """Raised by :func:`evaluate` when a request is never served."""


class ModelMismatchError(ValidationError):
    """Input lacks a field the operation's model requires (for example a
    predicted final request on an instance that names none)."""


class Variant(str, Enum):
    OPEN = "open"
    CLOSED = "closed"

    @classmethod
    def parse(cls, value: "Variant | str") -> "Variant":
        if isinstance(value, Variant):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown variant {value!r}; expected 'open' or 'closed'") from None


@dataclass(frozen=True, slots=True)
class Request:
    label: int
    position: float
    release_time: float

    def __post_init__(self) -> None:
        if self.release_time < 0:
            raise ValidationError(f"request {self.label}: negative release time {self.release_time}")


@dataclass(frozen=True)
class PredictionSet:
    """Predicted positions keyed by request label, plus the optional predicted
    final label used by the location-and-final-request model."""

    positions: Mapping[int, float]
    final_label: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", dict(self.positions))

    def position_of(self, label: int) -> float:
        return self.positions[label]


@dataclass(frozen=True)
class Instance:
    variant: Variant
    requests: tuple[Request, ...]
    predictions: Optional[PredictionSet] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "requests", tuple(self.requests))

    @property
    def n(self) -> int:
        return len(self.requests)

    def positions(self) -> list[float]:
        return [r.position for r in self.requests]

    def by_label(self) -> dict[int, Request]:
        return {r.label: r for r in self.requests}

    def with_variant(self, variant: Variant | str) -> "Instance":
        return replace(self, variant=Variant.parse(variant))

    def with_predictions(self, predictions: Optional[PredictionSet]) -> "Instance":
        return replace(self, predictions=predictions)


@dataclass(frozen=True, slots=True)
class Extremes:
    L: float
    R: float
    Far: float
    Near: float

    @property
    def span(self) -> float:
        """|L| + |R|; the normalization length for both error measures."""
        return self.R - self.L


@dataclass(frozen=True, slots=True)
class Segment:
    start_time: float
    start_pos: float
    velocity: float
    end_time: float

    @property
    def end_pos(self) -> float:
        return self.start_pos + self.velocity * (self.end_time - self.start_time)

    def position(self, t: float) -> float:
        return self.start_pos + self.velocity * (t - self.start_time)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear unit-speed-bounded path starting at (t=0, pos=0)."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        segs = self.segments
        if not segs:
            raise ValidationError("trajectory needs at least one segment")
        if abs(segs[0].start_time) > TOL or abs(segs[0].start_pos) > TOL:
            raise ValidationError("trajectory must start at time 0, position 0")
        prev_t, prev_x = 0.0, 0.0
        for s in segs:
            if abs(s.velocity) > 1.0 + TOL:
                raise ValidationError(f"segment velocity {s.velocity} exceeds unit speed")
            if s.end_time < s.start_time - TOL:
                raise ValidationError("segment runs backwards in time")
            if abs(s.start_time - prev_t) > TOL or abs(s.start_pos - prev_x) > TOL:
                raise ValidationError("trajectory is discontinuous between segments")
            prev_t, prev_x = s.end_time, s.end_pos
        object.__setattr__(self, "_starts", [s.start_time for s in segs])

    @property
    def end_time(self) -> float:
        return self.segments[-1].end_time

    @property
    def end_pos(self) -> float:
        return self.segments[-1].end_pos

    def position(self, t: float) -> float:
        segs = self.segments
        if t <= segs[0].start_time:
            return segs[0].start_pos
        if t >= segs[-1].end_time:
            return segs[-1].end_pos
        i = bisect_right(self._starts, t) - 1  # type: ignore[attr-defined]
        # zero-length segments can share a start time; walk to the covering one
        while i + 1 < len(segs) and segs[i].end_time < t:
            i += 1
        return segs[i].position(t)


@dataclass(frozen=True)
class SimResult:
    trajectory: Trajectory
    serve_times: Mapping[int, float]
    t_serve: float
    makespan: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "serve_times", dict(self.serve_times))


def _has_origin_request(inst: Instance) -> Optional[Request]:
    for r in inst.requests:
        if abs(r.position) <= TOL and r.release_time <= TOL:
            if inst.predictions is None:
                return r
            p = inst.predictions.positions.get(r.label)
            if p is not None and abs(p) <= TOL:
                return r
    return None


def normalize_instance(raw: Instance) -> Instance:
    """Return an equivalent instance guaranteed to contain the origin request
    (position 0, release 0, predicted at 0).

    Idempotent; rejects duplicate labels.  All other content is preserved.
    """
    labels = [r.label for r in raw.requests]
    if len(labels) != len(set(labels)):
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        raise ValidationError(f"duplicate request labels: {dupes}")
    if raw.predictions is not None:
        missing = [l for l in labels if l not in raw.predictions.positions]
        if missing:
            raise ValidationError(f"labels without a prediction: {missing}")
        fl = raw.predictions.final_label
        if fl is not None and fl not in set(labels):
            raise ValidationError(f"final_label {fl} names no request")

    if _has_origin_request(raw) is not None:
        return raw

    fresh = 0 if 0 not in set(labels) else max(labels, default=-1) + 1
    requests = raw.requests + (Request(fresh, 0.0, 0.0),)
    preds = raw.predictions
    if preds is not None:
        positions = dict(preds.positions)
        positions[fresh] = 0.0
        preds = PredictionSet(positions, preds.final_label)
    return Instance(raw.variant, requests, preds)


def extremes(inst: Instance) -> Extremes:
    """Leftmost/rightmost request positions and the far/near convention
    (|L| = |R| resolves Far to the right)."""
    xs = inst.positions()
    if not xs:
        raise ValidationError("instance has no requests")
    L, R = min(xs), max(xs)
    if L > TOL or R < -TOL:
        raise ValidationError("normalized instance must span the origin")
    if abs(L) > abs(R):
        far, near = L, R
    else:
        far, near = R, L
    return Extremes(L=L, R=R, Far=far, Near=near)


def _earliest_serve(traj: Trajectory, position: float, release: float) -> Optional[float]:
    best: Optional[float] = None
    for s in traj.segments:
        x0, x1 = s.start_pos, s.end_pos
        if s.velocity == 0.0 or x0 == x1:
            if abs(x0 - position) <= TOL:
                t = max(s.start_time, release)
                if t <= s.end_time:
                    best = t if best is None else min(best, t)
        else:
            lo, hi = (x0, x1) if x0 <= x1 else (x1, x0)
            if lo - TOL <= position <= hi + TOL:
                tc = s.start_time + (position - x0) / s.velocity
                tc = min(max(tc, s.start_time), s.end_time)
                if tc >= release:
                    best = tc if best is None else min(best, tc)
        if best is not None and best <= s.end_time:
            # segments are time-ordered; nothing later can beat this serve
            break
    return best


def evaluate(traj: Trajectory, inst: Instance) -> SimResult:
    """Price a trajectory against an instance.

    serve_time[q] is the earliest instant t >= release(q) at which the
    trajectory sits on q's position; open makespan is the last serve, closed
    adds the distance from the last-serve position back to the origin.
    """
    serve_times: dict[int, float] = {}
    unserved = []
    for r in inst.requests:
        t = _earliest_serve(traj, r.position, r.release_time)
        if t is None:
            unserved.append(r.label)
        else:
            serve_times[r.label] = t
    if unserved:
        raise IncompleteTrajectoryError(f"trajectory never serves labels {sorted(unserved)}")
    t_serve = max(serve_times.values()) if serve_times else 0.0
    if inst.variant is Variant.CLOSED:
        makespan = t_serve + abs(traj.position(t_serve))
    else:
        makespan = t_serve
    return SimResult(traj, serve_times, t_serve, makespan)


# ---------------------------------------------------------------------------
# JSON interchange:
#   {variant, requests: [{label, pos, rel}], predictions: [{label, pos}], final_label?}

def instance_to_json(inst: Instance) -> str:
    doc: dict = {
        "variant": inst.variant.value,
        "requests": [
            {"label": r.label, "pos": r.position, "rel": r.release_time} for r in inst.requests
        ],
    }
    if inst.predictions is not None:
        doc["predictions"] = [
            {"label": l, "pos": p} for l, p in sorted(inst.predictions.positions.items())
        ]
        if inst.predictions.final_label is not None:
            doc["final_label"] = inst.predictions.final_label
    return json.dumps(doc, indent=2)


def instance_from_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"bad instance JSON: {e}") from None
    try:
        requests = tuple(
            Request(int(r["label"]), float(r["pos"]), float(r["rel"])) for r in doc["requests"]
        )
        preds = None
        if doc.get("predictions") is not None:
            positions = {int(p["label"]): float(p["pos"]) for p in doc["predictions"]}
            final = doc.get("final_label")
            preds = PredictionSet(positions, None if final is None else int(final))
        return Instance(Variant.parse(doc["variant"]), requests, preds)
    except (KeyError, TypeError) as e:
        raise ValidationError(f"bad instance JSON structure: {e}") from None


def sim_result_to_json(sim: SimResult) -> str:
    return json.dumps(
        {
            "makespan": sim.makespan,
            "t_serve": sim.t_serve,
            "serve_times": {str(k): v for k, v in sorted(sim.serve_times.items())},
            "trajectory": [
                {
                    "t0": s.start_time,
                    "x0": s.start_pos,
                    "v": s.velocity,
                    "t1": s.end_time,
                }
                for s in sim.trajectory.segments
            ],
        },
        indent=2,
    )
