"""Core types: normalization, extremes, trajectory evaluation."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linetsp.core import (
    TOL,
    IncompleteTrajectoryError,
    Instance,
    PredictionSet,
    Request,
    Segment,
    Trajectory,
    ValidationError,
    Variant,
    evaluate,
    extremes,
    instance_from_json,
    instance_to_json,
    normalize_instance,
)


def make_instance(points, variant="open", predictions=None, final_label=None):
    reqs = tuple(Request(i + 1, p, r) for i, (p, r) in enumerate(points))
    preds = None
    if predictions is not None:
        preds = PredictionSet(dict(predictions), final_label)
    return normalize_instance(Instance(Variant.parse(variant), reqs, preds))


def traj(*waypoints, speed=1.0):
    """Build a trajectory through (time, pos) waypoints starting at (0, 0)."""
    segs = []
    t, x = 0.0, 0.0
    for wt, wx in waypoints:
        v = 0.0 if wt == t else (wx - x) / (wt - t)
        segs.append(Segment(t, x, v, wt))
        t, x = wt, wx
    return Trajectory(tuple(segs))


class TestNormalize:
    def test_adds_origin_request(self):
        inst = normalize_instance(Instance(Variant.OPEN, (Request(1, 1.0, 5.0),)))
        assert inst.n == 2
        origin = [r for r in inst.requests if r.position == 0.0 and r.release_time == 0.0]
        assert len(origin) == 1

    def test_idempotent(self):
        inst = normalize_instance(
            Instance(
                Variant.OPEN,
                (Request(0, 0.0, 0.0), Request(1, 1.0, 0.0)),
                PredictionSet({0: 0.0, 1: 1.0}),
            )
        )
        assert normalize_instance(inst) is inst

    def test_two_requests_example(self):
        inst = make_instance([(-1.0, 0.0), (2.0, 3.0)])
        assert inst.n == 3
        ext = extremes(inst)
        assert ext.L == -1.0 and ext.R == 2.0

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValidationError):
            normalize_instance(Instance(Variant.OPEN, (Request(1, 0.5, 0.0), Request(1, 1.0, 0.0))))

    def test_missing_prediction_rejected(self):
        with pytest.raises(ValidationError):
            normalize_instance(
                Instance(Variant.OPEN, (Request(1, 1.0, 0.0),), PredictionSet({2: 1.0}))
            )

    def test_final_label_must_exist(self):
        with pytest.raises(ValidationError):
            normalize_instance(
                Instance(
                    Variant.OPEN,
                    (Request(1, 1.0, 0.0),),
                    PredictionSet({1: 1.0}, final_label=7),
                )
            )

    def test_origin_with_wrong_prediction_not_reused(self):
        # a request at (0, 0) predicted away from 0 does not satisfy normalization
        inst = normalize_instance(
            Instance(
                Variant.OPEN,
                (Request(1, 0.0, 0.0),),
                PredictionSet({1: 0.5}),
            )
        )
        assert inst.n == 2
        added = inst.by_label()[0]
        assert added.position == 0.0
        assert inst.predictions.positions[0] == 0.0

    def test_negative_release_rejected(self):
        with pytest.raises(ValidationError):
            Request(1, 0.0, -0.5)


class TestExtremes:
    def test_plain_min_max(self):
        ext = extremes(make_instance([(2.0, 0.0), (-1.0, 0.0)]))
        assert (ext.L, ext.R, ext.Far, ext.Near) == (-1.0, 2.0, 2.0, -1.0)

    def test_tie_goes_right(self):
        ext = extremes(make_instance([(1.0, 0.0), (-1.0, 0.0)]))
        assert ext.Far == 1.0 and ext.Near == -1.0

    def test_left_heavy(self):
        ext = extremes(make_instance([(-3.0, 0.0), (1.0, 0.0)]))
        assert ext.Far == -3.0 and ext.Near == 1.0

    def test_span(self):
        assert extremes(make_instance([(-3.0, 0.0), (1.0, 0.0)])).span == 4.0


class TestEvaluate:
    def test_single_move_open(self):
        inst = make_instance([(1.0, 0.0)])
        sim = evaluate(traj((1.0, 1.0)), inst)
        assert sim.makespan == pytest.approx(1.0, abs=TOL)

    def test_out_and_back_closed(self):
        inst = make_instance([(1.0, 0.0)], variant="closed")
        sim = evaluate(traj((1.0, 1.0), (2.0, 0.0)), inst)
        assert sim.makespan == pytest.approx(2.0, abs=TOL)
        assert sim.t_serve == pytest.approx(1.0, abs=TOL)

    def test_release_dominates_wait(self):
        inst = make_instance([(1.0, 5.0)])
        sim = evaluate(traj((1.0, 1.0), (5.0, 1.0)), inst)
        assert sim.makespan == pytest.approx(5.0, abs=TOL)

    def test_passing_before_release_does_not_serve(self):
        # crossing the position before release must not count; the return
        # crossing serves it
        inst = make_instance([(0.5, 1.2)])
        sim = evaluate(traj((1.0, 1.0), (2.0, 0.0)), inst)
        assert sim.serve_times[1] == pytest.approx(1.5, abs=TOL)

    def test_incomplete_raises(self):
        inst = make_instance([(4.0, 0.0)])
        with pytest.raises(IncompleteTrajectoryError):
            evaluate(traj((1.0, 1.0)), inst)

    def test_closed_open_relation(self):
        # closed = open + |pos(t_serve)| exactly, on the same trajectory
        pts = [(0.7, 0.0), (-0.4, 1.0)]
        t = traj((0.7, 0.7), (1.8, -0.4), (2.2, -0.4), (2.6, 0.0))
        open_sim = evaluate(t, make_instance(pts, variant="open"))
        closed_sim = evaluate(t, make_instance(pts, variant="closed"))
        expected = open_sim.makespan + abs(t.position(open_sim.t_serve))
        assert closed_sim.makespan == expected

    def test_monotone_in_requests(self):
        t = traj((1.0, 1.0), (3.0, -1.0))
        base = make_instance([(1.0, 0.0)])
        more = make_instance([(1.0, 0.0), (-1.0, 0.0)])
        assert evaluate(t, more).makespan >= evaluate(t, base).makespan


class TestTrajectory:
    def test_must_start_at_origin(self):
        with pytest.raises(ValidationError):
            Trajectory((Segment(1.0, 0.0, 1.0, 2.0),))

    def test_rejects_superunit_speed(self):
        with pytest.raises(ValidationError):
            Trajectory((Segment(0.0, 0.0, 1.5, 1.0),))

    def test_rejects_teleport(self):
        with pytest.raises(ValidationError):
            Trajectory((Segment(0.0, 0.0, 1.0, 1.0), Segment(1.0, 0.5, 1.0, 2.0)))

    def test_position_lookup(self):
        t = traj((1.0, 1.0), (2.0, 1.0), (4.0, -1.0))
        assert t.position(0.5) == pytest.approx(0.5)
        assert t.position(1.5) == pytest.approx(1.0)
        assert t.position(3.0) == pytest.approx(0.0)
        assert t.position(99.0) == pytest.approx(-1.0)

    @given(
        st.lists(
            st.tuples(st.floats(0.1, 3.0), st.floats(-2.0, 2.0)),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=100)
    def test_unit_speed_property(self, deltas):
        """|pos(t') - pos(t)| <= (t' - t) + tol for sampled times on any
        plan-built trajectory."""
        segs = []
        t, x = 0.0, 0.0
        for dt, target in deltas:
            # move toward target at unit speed for the larger of (distance, dt)
            span = abs(target - x)
            duration = max(span, dt)
            v = 0.0 if span == 0.0 else (target - x) / duration
            segs.append(Segment(t, x, v, t + duration))
            t, x = t + duration, x + v * duration
        tr = Trajectory(tuple(segs))
        times = [0.0, t / 3, t / 2, t * 0.9, t]
        for a in times:
            for b in times:
                if a < b:
                    assert abs(tr.position(b) - tr.position(a)) <= (b - a) + TOL


def test_json_round_trip():
    inst = make_instance(
        [(1.25, 0.5), (-0.75, 2.0)],
        variant="closed",
        predictions={1: 1.3, 2: -0.7, 0: 0.0},
    )
    back = instance_from_json(instance_to_json(inst))
    assert back.variant is Variant.CLOSED
    assert back.requests == inst.requests
    assert back.predictions.positions == inst.predictions.positions


def test_json_final_label_round_trip():
    inst = make_instance(
        [(1.0, 0.0)], predictions={1: 1.0, 0: 0.0}, final_label=1
    )
    back = instance_from_json(instance_to_json(inst))
    assert back.predictions.final_label == 1


def test_bad_json_rejected():
    with pytest.raises(ValidationError):
        instance_from_json("{not json")
    with pytest.raises(ValidationError):
        instance_from_json("{\"variant\": \"open\"}")
