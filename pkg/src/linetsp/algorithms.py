"""The online algorithms, written as release-triggered update functions.

Each algorithm is a pure function from a snapshot of the run (current time and
position, released-but-unserved requests, predictions with their release
status) to a :class:`MovePlan`: an ordered list of positions to drive through
at unit speed, plus a flag saying whether reaching the end of the plan means
"wait here for the next release" or simply "plan exhausted".

Conventions shared by all of them:

* ``O`` — true positions of released, unserved requests;
* ``P`` — all predicted positions, released or not;
* ``P'`` — predicted positions of the requests still unreleased.

The far-side tie (prediction span symmetric around the origin) resolves to the
right everywhere, and a side test written as a strict inequality keeps its
else-branch on ties, so runs are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .core import ModelMismatchError, PredictionSet, ValidationError


@dataclass(frozen=True)
class MovePlan:
    targets: tuple[float, ...]
    terminal_wait: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))


@dataclass(frozen=True)
class AlgoState:
    """Snapshot handed to an update function at t=0 and at every release."""

    now: float
    pos: float
    outstanding_released: frozenset[int]
    released_positions: Mapping[int, float]  # true positions of released requests
    unreleased_predictions: frozenset[int]
    predictions: Optional[PredictionSet]
    n: int
    served: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "outstanding_released", frozenset(self.outstanding_released))
        object.__setattr__(self, "unreleased_predictions", frozenset(self.unreleased_predictions))
        object.__setattr__(self, "served", frozenset(self.served))
        if self.outstanding_released & self.served:
            raise ValidationError("a request cannot be both outstanding and served")

    @property
    def released_unserved(self) -> list[float]:
        return [self.released_positions[l] for l in sorted(self.outstanding_released)]

    def _preds(self) -> PredictionSet:
        if self.predictions is None:
            raise ModelMismatchError("this algorithm requires location predictions")
        return self.predictions

    @property
    def prediction_values(self) -> list[float]:
        return [v for _, v in sorted(self._preds().positions.items())]

    @property
    def unreleased_pred_positions(self) -> list[float]:
        ps = self._preds()
        return [ps.position_of(l) for l in sorted(self.unreleased_predictions)]


def _ext(right: bool, values: list[float]) -> float:
    return max(values) if right else min(values)


# ---------------------------------------------------------------------------
# Far-side-first (closed variant).


def farfirst_ordering(predictions: PredictionSet) -> list[int]:
    """Far-side predictions by descending distance from the origin, then the
    other side by descending distance, origin predictions last; ties by
    ascending label.  The far side is the sign of the furthest prediction
    (symmetric span: right)."""
    items = sorted(predictions.positions.items())
    if not items:
        return []
    values = [v for _, v in items]
    far_right = abs(max(values)) >= abs(min(values))

    def key(item):
        label, p = item
        if p == 0.0:
            group = 2
        elif (p > 0.0) == far_right:
            group = 0
        else:
            group = 1
        return (group, -abs(p), label)

    return [label for label, _ in sorted(items, key=key)]


def farfirst_update(state: AlgoState) -> MovePlan:
    """Sweep the current released extent side-aware, then head for the first
    unreleased prediction in far-first order (origin when none is left)."""
    preds = state._preds()
    if len(state.served) >= state.n and not state.outstanding_released:
        return MovePlan((), terminal_wait=False)
    ordering = farfirst_ordering(preds)
    p = 0.0
    genuine = False
    for label in ordering:
        if label in state.unreleased_predictions:
            p = preds.position_of(label)
            genuine = True
            break

    values = state.prediction_values
    far_side = abs(max(values)) >= abs(min(values)) if values else True
    pos = state.pos
    pos_side = far_side if pos == 0.0 else pos > 0.0
    p_side = (not pos_side) if p == 0.0 else p > 0.0

    o = state.released_unserved
    targets = (
        _ext(pos_side, o + [pos]),
        _ext(p_side, o + [p]),
        p,
    )
    return MovePlan(targets, terminal_wait=genuine)


# ---------------------------------------------------------------------------
# Near-side-first (open variant).


def _sweep_released(state: AlgoState) -> MovePlan:
    """All predictions released: sweep the outstanding extent, nearer end first."""
    o = state.released_unserved
    if not o:
        return MovePlan((), terminal_wait=False)
    lo, hi = min(o), max(o)
    if state.pos < (lo + hi) / 2.0:
        return MovePlan((lo, hi), terminal_wait=False)
    return MovePlan((hi, lo), terminal_wait=False)


def nearfirst_update(state: AlgoState) -> MovePlan:
    """Chase the unreleased prediction on the side whose predicted extreme is
    nearer the origin, sweeping outstanding requests on the way."""
    if not state.unreleased_predictions:
        return _sweep_released(state)
    values = state.prediction_values
    o = state.released_unserved
    pp = state.unreleased_pred_positions
    if abs(min(values)) < abs(max(values)):
        return MovePlan((min(pp + o), min(pp)), terminal_wait=True)
    return MovePlan((max(pp + o), max(pp)), terminal_wait=True)


def pivot_update(state: AlgoState) -> MovePlan:
    """Like the near-first rule, but the side is chosen opposite the predicted
    final request (relative to the midpoint of the predicted extent)."""
    preds = state._preds()
    if preds.final_label is None:
        raise ModelMismatchError("pivot requires a predicted final request")
    if not state.unreleased_predictions:
        return _sweep_released(state)
    values = state.prediction_values
    o = state.released_unserved
    pp = state.unreleased_pred_positions
    p_final = preds.position_of(preds.final_label)
    if p_final > (max(values) + min(values)) / 2.0:
        return MovePlan((min(pp + o), min(pp)), terminal_wait=True)
    return MovePlan((max(pp + o), max(pp)), terminal_wait=True)


# ---------------------------------------------------------------------------
# Prediction-less baseline: wait out every release, then replay an optimal
# order from the origin (nearer extreme first serves everything en route).


def waitcopy_update(state: AlgoState) -> MovePlan:
    released = len(state.served) + len(state.outstanding_released)
    if released < state.n:
        return MovePlan((), terminal_wait=False)
    o = state.released_unserved
    if not o:
        return MovePlan((), terminal_wait=False)
    lo = min(o + [state.pos])
    hi = max(o + [state.pos])
    if abs(state.pos - lo) <= abs(state.pos - hi):
        return MovePlan((lo, hi), terminal_wait=False)
    return MovePlan((hi, lo), terminal_wait=False)


# ---------------------------------------------------------------------------
# Registry and guarantees.

UpdateFn = Callable[[AlgoState], MovePlan]

ALGORITHMS: dict[str, UpdateFn] = {
    "farfirst": farfirst_update,
    "nearfirst": nearfirst_update,
    "pivot": pivot_update,
    "waitcopy": waitcopy_update,
}

REQUIRES_PREDICTIONS = frozenset({"farfirst", "nearfirst", "pivot"})
REQUIRES_FINAL_LABEL = frozenset({"pivot"})


def get_algorithm(name: str) -> UpdateFn:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ValidationError(
            f"unknown algorithm {name!r}; choose from {', '.join(sorted(ALGORITHMS))}"
        ) from None


def ratio_guarantee(name: str, eta: float = 0.0, delta: float = 0.0) -> float:
    """Worst-case competitive ratio promised at the given measured errors.

    farfirst (closed):   min{3(1+eta)/2, 3}
    nearfirst (open):    min{1 + 2(1+eta)/(3-2eta), 3}, degrading to 3 from eta = 2/3
    pivot (open):        min{1 + (1+2(delta+3eta))/(3-2(delta+2eta)), 3} while the
                         denominator is positive, else 3
    waitcopy:            2 (wait time and the replayed tour are each at most opt)
    """
    if name == "farfirst":
        return min(1.5 * (1.0 + eta), 3.0)
    if name == "nearfirst":
        den = 3.0 - 2.0 * eta
        if den <= 0.0:
            return 3.0
        return min(1.0 + 2.0 * (1.0 + eta) / den, 3.0)
    if name == "pivot":
        den = 3.0 - 2.0 * (delta + 2.0 * eta)
        if den <= 0.0:
            return 3.0
        return min(1.0 + (1.0 + 2.0 * (delta + 3.0 * eta)) / den, 3.0)
    if name == "waitcopy":
        return 2.0
    raise ValidationError(f"unknown algorithm {name!r}")
