import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linetsp import (
    Instance,
    ModelMismatchError,
    PredictionSet,
    Request,
    ValidationError,
    normalize_instance,
)
from linetsp.oracle import OracleResult, UnsupportedVariantError, opt_bruteforce
from linetsp.predictions import (
    ErrorReport,
    Mould,
    apply_mould,
    delta_error,
    eta_error,
    gen_mould,
    side_bound_slack,
)


def make(points, variant="open", preds=None, final=None):
    reqs = [Request(i + 1, p, r) for i, (p, r) in enumerate(points)]
    ps = None
    if preds is not None:
        ps = PredictionSet({i + 1: q for i, q in enumerate(preds)}, final)
    return normalize_instance(Instance(variant, reqs, ps))


def with_perfect(inst, final=None):
    ps = PredictionSet({r.label: r.position for r in inst.requests}, final)
    return inst.with_predictions(ps)


class TestEtaError:
    def test_perfect_predictions(self):
        inst = with_perfect(make([(1.0, 0.0), (-2.0, 1.0)]))
        rep = eta_error(inst)
        assert rep.eta == 0.0 and rep.M == 0.0
        assert rep.delta is None and rep.Delta is None

    def test_hand_example(self):
        inst = make([(1.0, 0.0), (-2.0, 0.0)], preds=[1.3, -2.0])
        rep = eta_error(inst)
        assert rep.eta == pytest.approx(0.1, abs=1e-12)
        assert rep.M == pytest.approx(0.3, abs=1e-12)
        assert rep.M == rep.eta * 3.0

    def test_no_predictions_rejected(self):
        inst = make([(1.0, 0.0)])
        with pytest.raises(ValidationError):
            eta_error(inst)

    def test_degenerate_all_origin(self):
        inst = make([(0.0, 0.0)], preds=[0.0])
        assert eta_error(inst).eta == 0.0
        bad = make([(0.0, 0.0)], preds=[0.5])
        with pytest.raises(ValidationError):
            eta_error(bad)

    def test_scale_invariance(self):
        pts = [(1.25, 0.0), (-0.5, 2.0)]
        preds = [1.5, -0.75]
        base = eta_error(make(pts, preds=preds)).eta
        for s in (2.0, 0.5, 4.0):  # powers of two scale floats exactly
            scaled = eta_error(
                make([(p * s, r) for p, r in pts], preds=[q * s for q in preds])
            ).eta
            assert scaled == base


class TestDeltaError:
    def test_final_on_ender_is_zero(self):
        inst = with_perfect(make([(-1.0, 0.0), (1.0, 0.0)]))
        oracle = opt_bruteforce(inst)
        ender = next(iter(oracle.ender_set))
        rep = delta_error(inst.with_predictions(PredictionSet(inst.predictions.positions, ender)), oracle)
        assert rep.delta == 0.0 and rep.Delta == 0.0

    def test_opposite_extreme(self):
        # release on the left request forces optimal schedules to end there
        inst = with_perfect(make([(-1.0, 1.5), (1.0, 0.0)]))
        oracle = opt_bruteforce(inst)
        by_pos = {r.position: r.label for r in inst.requests}
        assert oracle.ender_set == frozenset({by_pos[-1.0]})
        rep = delta_error(
            inst.with_predictions(PredictionSet(inst.predictions.positions, by_pos[1.0])), oracle
        )
        assert rep.delta == pytest.approx(1.0, abs=1e-12)
        assert rep.Delta == pytest.approx(2.0, abs=1e-12)

    def test_every_label_bounded_and_minimized_on_enders(self):
        rng = np.random.default_rng(3)
        pts = [(float(rng.uniform(-3, 3)), float(rng.uniform(0, 4))) for _ in range(5)]
        inst = with_perfect(make(pts, "open"))
        oracle = opt_bruteforce(inst)
        deltas = {}
        for r in inst.requests:
            rep = delta_error(
                inst.with_predictions(PredictionSet(inst.predictions.positions, r.label)), oracle
            )
            deltas[r.label] = rep.delta
            assert 0.0 <= rep.delta <= 1.0 + 1e-12
        for l in oracle.ender_set:
            assert deltas[l] == 0.0
        assert min(deltas.values()) == 0.0

    def test_missing_final_label(self):
        inst = with_perfect(make([(1.0, 0.0)]))
        with pytest.raises(ModelMismatchError):
            delta_error(inst, opt_bruteforce(inst))

    def test_closed_rejected(self):
        inst = with_perfect(make([(1.0, 0.0)], "closed"), final=1)
        with pytest.raises(UnsupportedVariantError):
            delta_error(inst, OracleResult(2.0, (1,), frozenset({1})))


class TestApplyMould:
    def test_hand_example(self):
        inst = make([(1.0, 0.0), (-1.0, 0.0)])
        # full-length mould over sorted labels (0 origin, 1 at +1, 2 at -1)
        ps = apply_mould(inst, Mould((0.0, 1.0, -0.5)), 0.25)
        assert ps.positions[0] == 0.0
        assert ps.positions[1] == pytest.approx(1.5, abs=1e-12)
        assert ps.positions[2] == pytest.approx(-1.25, abs=1e-12)

    def test_short_mould_covers_non_origin(self):
        inst = make([(1.0, 0.0), (-1.0, 0.0)])
        ps = apply_mould(inst, Mould((1.0, -0.5)), 0.25)
        assert ps.positions[0] == 0.0
        assert ps.positions[1] == pytest.approx(1.5, abs=1e-12)
        assert ps.positions[2] == pytest.approx(-1.25, abs=1e-12)

    def test_zero_target_is_identity(self):
        inst = make([(0.7, 0.0), (-2.0, 1.0)])
        ps = apply_mould(inst, Mould((1.0, -1.0)), 0.0)
        for r in inst.requests:
            assert ps.positions[r.label] == r.position

    def test_round_trip_eta(self):
        inst = make([(1.0, 0.0), (-1.5, 2.0), (0.3, 0.5)])
        mould = gen_mould(3, 99)
        for x in np.arange(0.1, 1.05, 0.1):
            got = eta_error(inst.with_predictions(apply_mould(inst, mould, float(x)))).eta
            assert got == pytest.approx(float(x), abs=1e-12)

    def test_wrong_length(self):
        inst = make([(1.0, 0.0), (-1.0, 0.0)])
        with pytest.raises(ValidationError):
            apply_mould(inst, Mould((1.0,)), 0.1)

    def test_unit_scalar_on_origin_only_rejected(self):
        inst = make([(1.0, 0.0), (-1.0, 0.0)])
        with pytest.raises(ValidationError):
            apply_mould(inst, Mould((1.0, 0.5, -0.5)), 0.1)

    def test_mould_validation(self):
        with pytest.raises(ValidationError):
            Mould((1.2, 0.0))
        with pytest.raises(ValidationError):
            Mould((0.5, -0.5))
        with pytest.raises(ValidationError):
            Mould(())


class TestGenMould:
    def test_deterministic(self):
        assert gen_mould(6, 42).scalars == gen_mould(6, 42).scalars
        assert gen_mould(6, 42).scalars != gen_mould(6, 43).scalars

    def test_unit_scalar_present(self):
        for seed in range(50):
            m = gen_mould(5, seed)
            assert max(abs(s) for s in m.scalars) == 1.0
            assert all(-1.0 <= s <= 1.0 for s in m.scalars)

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            gen_mould(0, 1)

    def test_unforced_scalars_uniform(self):
        # chi-square over the scalars that were not pinned to +/-1
        vals = []
        for seed in range(10_000):
            vals.extend(s for s in gen_mould(5, seed).scalars if abs(s) != 1.0)
        vals = np.asarray(vals)
        bins = 20
        counts, _ = np.histogram(vals, bins=bins, range=(-1.0, 1.0))
        expected = len(vals) / bins
        stat = float(((counts - expected) ** 2 / expected).sum())
        # chi-square(19) 99.9% quantile is ~43.8; generous fixed ceiling
        assert stat < 50.0

    def test_forced_index_and_sign_vary(self):
        signs = set()
        for seed in range(200):
            m = gen_mould(4, seed)
            forced = [i for i, s in enumerate(m.scalars) if abs(s) == 1.0]
            signs.update(np.sign(m.scalars[i]) for i in forced)
        assert signs == {-1.0, 1.0}


class TestSideBound:
    def test_holds_on_random_moulded_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(1, 7))
            pts = [(float(rng.uniform(-3, 3)), float(rng.uniform(0, 4))) for _ in range(n)]
            inst = make(pts)
            mould = gen_mould(n, int(rng.integers(1 << 30)))
            eta = float(rng.uniform(0, 1))
            moulded = inst.with_predictions(apply_mould(inst, mould, eta))
            assert side_bound_slack(moulded) >= -1e-9

    @settings(max_examples=80, deadline=None)
    @given(
        pts=st.lists(
            st.tuples(
                st.floats(-4, 4, allow_nan=False).map(lambda x: round(x, 3)),
                st.floats(0, 5, allow_nan=False).map(lambda x: round(x, 3)),
            ),
            min_size=1,
            max_size=5,
        ),
        seed=st.integers(0, 2**20),
        eta=st.floats(0, 1, allow_nan=False),
    )
    def test_holds_property(self, pts, seed, eta):
        inst = make(pts)
        if inst.n == 1:  # origin-only: no room for a non-origin unit scalar
            eta = 0.0
        moulded = inst.with_predictions(apply_mould(inst, gen_mould(max(inst.n - 1, 1), seed), eta))
        assert side_bound_slack(moulded) >= -1e-9
