"""Event-driven simulation of an online algorithm against a request source.

The source may be a fixed instance or an adaptive adversary; either way it is
queried one committed trajectory segment at a time and answers with the next
release event inside that segment (or none).  The engine advances in closed
form — serve times and event positions are solutions of linear equations,
never the result of time-stepping — so adversary commit points and
arrival-equals-release coincidences are hit exactly.

Event loop: invoke the algorithm's update at t=0 and after every release
event; drive the returned plan target by target at unit speed; when a release
interrupts a move, truncate it at the event time, process the release (releases
come before serves at the same instant), then re-plan.  The open variant stops
the instant the last request is served, mid-move if need be; the closed variant
then drives straight home and the makespan includes that return.
"""

from __future__ import annotations

from typing import Callable, Optional, Protocol, Sequence, Union, runtime_checkable

from .algorithms import (
    REQUIRES_FINAL_LABEL,
    REQUIRES_PREDICTIONS,
    AlgoState,
    MovePlan,
    UpdateFn,
    get_algorithm,
)
from .core import (
    TOL,
    Instance,
    ModelMismatchError,
    PredictionSet,
    Request,
    Segment,
    SimResult,
    Trajectory,
    ValidationError,
    Variant,
    evaluate,
)
from .oracle import OracleResult

HORIZON = 1e6

SegmentQuery = tuple[float, float, float, float]  # (start_time, start_pos, velocity, end_time)
Event = tuple[float, list[Request]]


class ProtocolError(RuntimeError):
    """The event source broke the causality/batching contract."""


class DivergenceError(RuntimeError):
    """Simulation passed the time horizon without completing."""


@runtime_checkable
class EventSource(Protocol):
    n_requests: int

    def next_event(self, segment: SegmentQuery) -> Optional[Event]:
        """First release event strictly inside the committed segment, if any."""


class _FixedSource:
    """Releases every request of a fixed instance at its stored time."""

    def __init__(self, instance: Instance):
        self._pending = sorted(instance.requests, key=lambda r: (r.release_time, r.label))
        self.n_requests = len(instance.requests)

    def next_event(self, segment: SegmentQuery) -> Optional[Event]:
        t0, _x0, _v, t1 = segment
        if not self._pending:
            return None
        rel = self._pending[0].release_time
        if rel > t1:
            return None
        batch = []
        while self._pending and self._pending[0].release_time == rel:
            batch.append(self._pending.pop(0))
        return (max(rel, t0), batch)


def fixed_source(instance: Instance) -> EventSource:
    return _FixedSource(instance)


def _resolve_algorithm(
    algorithm: Union[str, UpdateFn], predictions: Optional[PredictionSet]
) -> UpdateFn:
    if callable(algorithm):
        return algorithm
    name = str(algorithm)
    fn = get_algorithm(name)
    if name in REQUIRES_PREDICTIONS and predictions is None:
        raise ModelMismatchError(f"{name} requires location predictions")
    if name in REQUIRES_FINAL_LABEL and predictions.final_label is None:
        raise ModelMismatchError(f"{name} requires a predicted final request")
    return fn


def simulate(
    source: EventSource,
    algorithm: Union[str, UpdateFn],
    predictions: Optional[PredictionSet] = None,
    variant: Union[Variant, str] = Variant.OPEN,
    horizon: float = HORIZON,
) -> SimResult:
    result, _ = simulate_with_transcript(source, algorithm, predictions, variant, horizon)
    return result


def simulate_with_transcript(
    source: EventSource,
    algorithm: Union[str, UpdateFn],
    predictions: Optional[PredictionSet] = None,
    variant: Union[Variant, str] = Variant.OPEN,
    horizon: float = HORIZON,
) -> tuple[SimResult, tuple[Request, ...]]:
    """Run the event loop; also return the realized releases in arrival order."""
    variant = Variant.parse(variant)
    update = _resolve_algorithm(algorithm, predictions)
    n = source.n_requests

    t, x = 0.0, 0.0
    segments: list[Segment] = []
    released: dict[int, Request] = {}
    served: dict[int, float] = {}
    transcript: list[Request] = []
    queue: list[float] = []

    def emit(t1: float, v: float) -> None:
        if t1 > t:
            segments.append(Segment(t, x, v, t1))

    def ingest(event: Event) -> None:
        te, batch = event
        if not batch:
            raise ProtocolError("event with no releases")
        for req in batch:
            if req.label in released:
                raise ProtocolError(f"label {req.label} released twice")
            if req.release_time != te:
                raise ProtocolError(
                    f"request {req.label} released at {te} but stamped {req.release_time}"
                )
            released[req.label] = req
            transcript.append(req)
        if len(released) > n:
            raise ProtocolError(f"source released more than its declared {n} requests")

    def serve_here(now: float) -> None:
        for label in sorted(released):
            if label in served:
                continue
            if abs(released[label].position - x) <= TOL:
                served[label] = now

    def run_update() -> None:
        nonlocal queue
        unrel = (
            frozenset(l for l in predictions.positions if l not in released)
            if predictions is not None
            else frozenset()
        )
        state = AlgoState(
            now=t,
            pos=x,
            outstanding_released=frozenset(l for l in released if l not in served),
            released_positions={l: r.position for l, r in released.items()},
            unreleased_predictions=unrel,
            predictions=predictions,
            n=n,
            served=frozenset(served),
        )
        queue = list(update(state).targets)

    def finish() -> tuple[SimResult, tuple[Request, ...]]:
        t_serve = max(served.values()) if served else 0.0
        makespan = t_serve
        if variant is Variant.CLOSED and abs(x) > 0.0:
            home = t + abs(x)
            if home > t:
                segments.append(Segment(t, x, -1.0 if x > 0 else 1.0, home))
            makespan = home
        if not segments:
            segments.append(Segment(0.0, 0.0, 0.0, max(t, 0.0)))
        traj = Trajectory(tuple(segments))
        return SimResult(traj, dict(served), t_serve, makespan), tuple(transcript)

    # collect releases already available at t=0, serve in place, first plan
    event = source.next_event((0.0, 0.0, 0.0, 0.0))
    if event is not None:
        if event[0] != 0.0:
            raise ProtocolError(f"event at {event[0]} outside the t=0 probe")
        ingest(event)
        serve_here(0.0)
    if len(served) == n:
        return finish()
    run_update()

    while True:
        if t > horizon:
            raise DivergenceError(f"simulation passed the horizon at t={t}")

        # drop already-satisfied targets (exact: arrivals snap to their target)
        while queue:
            if queue[0] == x:
                queue.pop(0)
            elif t + abs(queue[0] - x) == t:  # sub-ulp move: snap, no time passes
                x = queue.pop(0)
            else:
                break

        if not queue:
            event = source.next_event((t, x, 0.0, horizon))
            if event is None:
                outstanding = len(released) - len(served)
                if len(released) < n:
                    raise DivergenceError(
                        f"horizon reached with {n - len(released)} requests unreleased"
                    )
                raise DivergenceError(
                    f"algorithm idle with {outstanding} released requests unserved"
                )
            te = event[0]
            if not (t <= te <= horizon):
                raise ProtocolError(f"event at {te} outside queried segment [{t}, {horizon}]")
            emit(te, 0.0)
            t = te
            ingest(event)
            serve_here(t)
            if len(served) == n:
                return finish()
            run_update()
            continue

        target = queue[0]
        v = 1.0 if target > x else -1.0
        t_arr = t + abs(target - x)
        event = source.next_event((t, x, v, t_arr))
        te = t_arr if event is None else event[0]
        if event is not None and not (t <= te <= t_arr):
            raise ProtocolError(f"event at {te} outside queried segment [{t}, {t_arr}]")

        # serves crossed in [t, te], in chronological order; the filter compares
        # absolute serve times (t + d == t_arr bit-for-bit at the endpoint,
        # whereas te - t need not round back to d) and the membership test is
        # TOL-wide on both ends, mirroring offline evaluation -- a request a
        # few ulps past the turnaround point is served at the turnaround, not
        # left dangling until the next event
        crossings = []
        for label in sorted(released):
            if label in served:
                continue
            d = (released[label].position - x) * v
            if -TOL <= d and t + d <= te + TOL:
                crossings.append((min(max(t + d, t), te), label))
        crossings.sort()
        for t_c, label in crossings:
            served[label] = t_c
            if len(served) == n:
                emit(t_c, v)
                t = t_c
                x = released[label].position
                return finish()

        if event is None:
            emit(t_arr, v)
            t, x = t_arr, target  # exact arrival
            queue.pop(0)
        else:
            emit(te, v)
            x = x + v * (te - t)
            t = te
            ingest(event)
            serve_here(t)
            if len(served) == n:
                return finish()
            run_update()


def simulate_instance(
    instance: Instance, algorithm: Union[str, UpdateFn], horizon: float = HORIZON
) -> SimResult:
    """Simulate against a fixed instance, using its own predictions/variant."""
    return simulate(
        fixed_source(instance), algorithm, instance.predictions, instance.variant, horizon
    )


def transcript_to_instance(
    transcript: Sequence[Request],
    variant: Union[Variant, str],
    predictions: Optional[PredictionSet] = None,
) -> Instance:
    """Freeze an adaptive run's realized releases into a fixed instance (the
    oracle prices adaptive runs on exactly this)."""
    reqs = sorted(transcript, key=lambda r: r.label)
    return Instance(Variant.parse(variant), tuple(reqs), predictions)


def competitive_ratio(sim: SimResult, oracle: OracleResult) -> float:
    if oracle.opt_makespan <= TOL:
        return 1.0
    return sim.makespan / oracle.opt_makespan


def check_invariants(sim: SimResult, instance: Instance) -> None:
    """Assert the physical invariants of a finished run against its (transcript)
    instance: unit speed, serve-at-or-after-release (exactly), completeness,
    variant termination, and agreement with the offline trajectory evaluation."""
    by = instance.by_label()
    if set(sim.serve_times) != set(by):
        missing = sorted(set(by) - set(sim.serve_times))
        raise ValidationError(f"run did not serve labels {missing}")
    for seg in sim.trajectory.segments:
        if abs(seg.velocity) > 1.0:
            raise ValidationError(f"segment exceeds unit speed: {seg}")
    for label, st in sim.serve_times.items():
        req = by[label]
        if st < req.release_time:
            raise ValidationError(f"label {label} served at {st} before release {req.release_time}")
        if abs(sim.trajectory.position(st) - req.position) > TOL:
            raise ValidationError(f"label {label} served away from its position")
    t_last = max(sim.serve_times.values())
    if t_last != sim.t_serve:
        raise ValidationError("t_serve is not the last serve time")
    if instance.variant is Variant.CLOSED:
        if abs(sim.trajectory.end_pos) > TOL:
            raise ValidationError("closed run does not end at the origin")
        if abs(sim.makespan - (sim.t_serve + abs(sim.trajectory.position(sim.t_serve)))) > TOL:
            raise ValidationError("closed makespan is not serve time plus return")
    else:
        if sim.makespan != sim.t_serve:
            raise ValidationError("open makespan must equal the last serve time")
    replay = evaluate(sim.trajectory, instance)
    if abs(replay.makespan - sim.makespan) > TOL:
        raise ValidationError(
            f"offline evaluation disagrees: {replay.makespan} vs {sim.makespan}"
        )
    for label, st in sim.serve_times.items():
        if abs(replay.serve_times[label] - st) > TOL:
            raise ValidationError(f"label {label}: replayed serve {replay.serve_times[label]} vs {st}")
