"""Prediction-error metrics and mould-based prediction synthesis.

Two error measures drive everything downstream.  The location error of a
prediction set is the largest per-request deviation, normalised by the span
|L| + |R| of the true positions; its unnormalised form M multiplies the span
back in.  The final-request error compares the true position of the predicted
final request against the nearest position on which an optimal open schedule
can end.

Predictions at a chosen error level are synthesised through a *mould*: one
scalar per request in [-1, 1], at least one of unit magnitude, so that adding
``scalar * eta_target * span`` to each true position yields a prediction set
whose measured location error is exactly ``eta_target``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    TOL,
    Instance,
    ModelMismatchError,
    PredictionSet,
    ValidationError,
    Variant,
    extremes,
    normalize_instance,
)
from .oracle import OracleResult, UnsupportedVariantError


@dataclass(frozen=True)
class ErrorReport:
    eta: float
    M: float
    delta: Optional[float] = None
    Delta: Optional[float] = None


@dataclass(frozen=True)
class Mould:
    """Per-request offset scalars, applied positionally over sorted labels."""

    scalars: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scalars", tuple(float(s) for s in self.scalars))
        if not self.scalars:
            raise ValidationError("mould needs at least one scalar")
        if any(abs(s) > 1.0 + 1e-12 for s in self.scalars):
            raise ValidationError("mould scalars must lie in [-1, 1]")
        if max(abs(s) for s in self.scalars) < 1.0 - 1e-12:
            raise ValidationError("some mould scalar must have magnitude 1")

    def __len__(self) -> int:
        return len(self.scalars)


def _origin_label(inst: Instance) -> int:
    cands = [r.label for r in inst.requests if abs(r.position) <= TOL and r.release_time <= TOL]
    if not cands:
        raise ValidationError("normalized instance lost its origin request")
    return min(cands)


def eta_error(instance: Instance) -> ErrorReport:
    inst = normalize_instance(instance)
    if inst.predictions is None:
        raise ValidationError("instance carries no predictions")
    span = extremes(inst).span
    devs = [abs(r.position - inst.predictions.position_of(r.label)) for r in inst.requests]
    worst = max(devs)
    if span == 0.0:
        # every request at the origin: the normalisation is 0/0, defined only
        # when the predictions are exact too
        if worst <= TOL:
            return ErrorReport(eta=0.0, M=0.0)
        raise ValidationError("all requests at the origin but predictions deviate")
    eta = worst / span
    return ErrorReport(eta=eta, M=eta * span)


def delta_error(instance: Instance, oracle: OracleResult) -> ErrorReport:
    """Location error plus the final-request error of ``final_label`` measured
    against the oracle's ender set."""
    inst = normalize_instance(instance)
    if inst.variant is not Variant.OPEN:
        raise UnsupportedVariantError("final-request error is defined for the open variant only")
    if inst.predictions is None or inst.predictions.final_label is None:
        raise ModelMismatchError("instance names no predicted final request")
    if not oracle.ender_set:
        raise ValidationError("oracle result has an empty ender set")
    by = inst.by_label()
    q_f_prime = by[inst.predictions.final_label].position
    dist = min(abs(q_f_prime - by[l].position) for l in oracle.ender_set)
    span = extremes(inst).span
    base = eta_error(inst)
    if span == 0.0:
        return ErrorReport(eta=base.eta, M=base.M, delta=0.0, Delta=0.0)
    delta = dist / span
    return ErrorReport(eta=base.eta, M=base.M, delta=delta, Delta=delta * span)


def apply_mould(instance: Instance, mould: Mould | Sequence[float], eta_target: float) -> PredictionSet:
    """Predictions at location error exactly ``eta_target``.

    The mould's scalars map positionally onto sorted labels.  A mould of n-1
    scalars covers the non-origin labels; a full-length mould covers all of
    them, but the origin's entry is forced to 0 either way (the origin is
    always predicted perfectly).
    """
    if eta_target < 0.0:
        raise ValidationError("eta_target must be nonnegative")
    if not isinstance(mould, Mould):
        mould = Mould(tuple(mould))
    inst = normalize_instance(instance)
    labels = sorted(r.label for r in inst.requests)
    origin = _origin_label(inst)
    if len(mould) == len(labels) - 1:
        targets = [l for l in labels if l != origin]
    elif len(mould) == len(labels):
        targets = labels
    else:
        raise ValidationError(
            f"mould has {len(mould)} scalars; expected {len(labels) - 1} or {len(labels)}"
        )
    scalar = dict(zip(targets, mould.scalars))
    scalar[origin] = 0.0
    if eta_target > 0.0 and max(abs(scalar[l]) for l in labels) < 1.0 - 1e-12:
        raise ValidationError("mould's unit scalar must sit on a non-origin label")
    span = extremes(inst).span
    by = inst.by_label()
    positions = {l: by[l].position + scalar[l] * eta_target * span for l in labels}
    final = inst.predictions.final_label if inst.predictions is not None else None
    return PredictionSet(positions, final)


def gen_mould(n: int, rng_seed: int) -> Mould:
    """n scalars uniform on [-1, 1]; one uniformly chosen entry is replaced by
    +/-1 (sign uniform) so the mould always attains its target error."""
    if n < 1:
        raise ValidationError("a mould needs at least one scalar")
    rng = np.random.default_rng(rng_seed)
    scalars = rng.uniform(-1.0, 1.0, n)
    idx = int(rng.integers(n))
    scalars[idx] = 1.0 if rng.integers(2) else -1.0
    return Mould(tuple(float(s) for s in scalars))


def side_bound_slack(instance: Instance) -> float:
    """Slack of the predicted-side guarantee: when the predictions' heavier
    side is (say) the left, the true left extent may trail the right by at most
    twice the unnormalised location error.  Returns the worst slack over the
    applicable implications; theory puts it at >= 0 (checks allow -1e-9)."""
    inst = normalize_instance(instance)
    if inst.predictions is None:
        raise ValidationError("instance carries no predictions")
    ext = extremes(inst)
    preds = [inst.predictions.position_of(r.label) for r in inst.requests]
    lp, rp = min(preds), max(preds)
    m = eta_error(inst).M
    slack = np.inf
    if abs(lp) >= abs(rp):
        slack = min(slack, abs(ext.L) - (abs(ext.R) - 2.0 * m))
    if abs(rp) >= abs(lp):
        slack = min(slack, abs(ext.R) - (abs(ext.L) - 2.0 * m))
    return float(slack)
