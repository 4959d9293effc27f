"""Exact offline optimum for both variants, optimal serve orders, and the set
of requests on which some optimal open schedule can finish.

Normal form: an optimal schedule moves directly between consecutively served
requests and waits only at destinations, so the optimum is the minimum over
serve orders of the arrival chain

    t_k = max(t_{k-1} + |q_k - q_{k-1}|, release(q_k)),     t_0 = 0 at the origin,

with ``+ |q_n|`` appended for the closed variant.  Two solvers share that
normal form: an exhaustive search (independent oracle, small n) and a
(subset, last)-state dynamic program.  Both run on the dominance-pruned
request core; pruning never changes the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import TOL, Instance, Request, ValidationError, Variant, normalize_instance

PRUNE_TOL = 1e-12  # float slack for the closed-form dominance bounds

_BRUTE_LIMIT = 10
_DP_LIMIT = 22
_NUMBA_THRESHOLD = 8  # cores at least this big go to the compiled kernel


class SizeError(ValueError):
    """Instance (after pruning) exceeds the solver's size limit."""


class UnsupportedVariantError(ValidationError):
    """Operation defined for one variant only."""


@dataclass(frozen=True)
class OracleResult:
    opt_makespan: float
    optimal_order: tuple[int, ...]  # labels of non-dominated requests, serve order
    ender_set: frozenset[int]  # open variant: labels that can finish an optimal schedule


# ---------------------------------------------------------------------------
# Dominance pruning.
#
# A request B may be dropped when every schedule of the kept set is forced to
# cross B's position at or after B's release, so serving B costs nothing:
#
#  * same position: the kept request with the largest release dominates;
#  * bracketing: kept requests A1 (left of B) and A2 (right of B) are each
#    visited no earlier than max(release, |position|); between those two visits
#    the agent sweeps across B.  The start at the origin acts as a free anchor
#    on B's origin side.
#  * closed variant only: a same-side kept request at least as far out forces a
#    crossing of B on the final return to the origin.
#
# Removals are verified against the final kept set (and resurrected if their
# justification relied on another removed request), so chains of dominations
# can never be circular.


def _dominated(b: Request, kept: Sequence[Request], closed: bool) -> bool:
    pb, rb = b.position, b.release_time
    max_left = pb if pb >= 0.0 else -np.inf  # virtual anchor: start at origin, time 0
    max_right = -pb if pb <= 0.0 else -np.inf
    for a in kept:
        if a is b:
            continue
        pa = a.position
        visit = a.release_time if a.release_time > abs(pa) else abs(pa)
        if pa <= pb and visit + (pb - pa) > max_left:
            max_left = visit + (pb - pa)
        if pa >= pb and visit + (pa - pb) > max_right:
            max_right = visit + (pa - pb)
        if closed and ((pa >= 0.0) == (pb >= 0.0) or pb == 0.0):
            if abs(pa) >= abs(pb) - PRUNE_TOL and rb <= visit + (abs(pa) - abs(pb)) + PRUNE_TOL:
                return True
    bound = max_left if max_left < max_right else max_right
    return rb <= bound + PRUNE_TOL


def prune_requests(requests: Sequence[Request], variant: Variant) -> tuple[list[Request], list[Request]]:
    """Split requests into (kept core, dominated); opt over the core equals opt
    over the full set for the given variant."""
    closed = Variant.parse(variant) is Variant.CLOSED

    # same-position groups: keep the latest release (ties: lowest label)
    groups: dict = {}
    order = sorted(requests, key=lambda r: (r.position, r.label))
    kept: list[Request] = []
    removed: list[Request] = []
    anchor: Optional[Request] = None
    for r in order:
        if anchor is not None and abs(r.position - anchor.position) <= PRUNE_TOL:
            groups.setdefault(id(anchor), []).append(r)
        else:
            anchor = r
            groups[id(anchor)] = [r]
    for members in groups.values():
        rep = max(members, key=lambda r: (r.release_time, -r.label))
        kept.append(rep)
        removed.extend(r for r in members if r is not rep)

    kept.sort(key=lambda r: r.label)
    for _ in range(len(kept) + 1):
        prunable = [b for b in kept if _dominated(b, kept, closed)]
        if not prunable:
            break
        trial = set(id(b) for b in prunable)
        survivors = [k for k in kept if id(k) not in trial]
        pool = prunable
        while True:  # resurrect anything whose domination leaned on the pool
            resurrected = [b for b in pool if not _dominated(b, survivors, closed)]
            if not resurrected:
                break
            survivors.extend(resurrected)
            survivors.sort(key=lambda r: r.label)
            back = set(id(b) for b in resurrected)
            pool = [b for b in pool if id(b) not in back]
        if not pool:
            break  # the whole batch was circular; keep everything, stop
        removed.extend(pool)
        kept = survivors
    return kept, removed


# ---------------------------------------------------------------------------
# Arrival chain and order replay.


def chain_makespan(points: Sequence[tuple[float, float]], closed: bool) -> float:
    """Arrival recursion over (position, release) pairs served in list order."""
    t, x = 0.0, 0.0
    for pos, rel in points:
        t = t + abs(pos - x)
        if t < rel:
            t = rel
        x = pos
    return t + abs(x) if closed else t


def replay_order(inst: Instance, order: Iterable[int]) -> float:
    """Makespan of serving `order` (labels) as direct moves with destination waits."""
    by = inst.by_label()
    pts = [(by[l].position, by[l].release_time) for l in order]
    return chain_makespan(pts, inst.variant is Variant.CLOSED)


# ---------------------------------------------------------------------------
# Held-Karp over (subset, last) on the pruned core.  Subsets are enumerated in
# popcount order (Gosper's hack); a single float per state, predecessors are
# recovered by re-playing the exact float transition.

_HK_INF = 1e30


def _pure_held_karp(pos: np.ndarray, rel: np.ndarray):
    k = len(pos)
    full = (1 << k) - 1
    cost = np.full((full + 1) * k, _HK_INF)
    for i in range(k):
        c = abs(pos[i])
        if c < rel[i]:
            c = rel[i]
        cost[(1 << i) * k + i] = c
    for size in range(2, k + 1):
        mask = (1 << size) - 1
        while mask <= full:
            base = mask * k
            for last in range(k):
                if not (mask >> last) & 1:
                    continue
                pm = mask ^ (1 << last)
                pbase = pm * k
                pl = pos[last]
                best = _HK_INF
                for prev in range(k):
                    if not (pm >> prev) & 1:
                        continue
                    c = cost[pbase + prev] + abs(pl - pos[prev])
                    if c < best:
                        best = c
                if best < rel[last]:
                    best = rel[last]
                cost[base + last] = best
            # Gosper: next subset of the same popcount
            c = mask & (-mask)
            r = mask + c
            mask = (((r ^ mask) >> 2) // c) | r
    final = np.array([cost[full * k + i] for i in range(k)])
    return final, cost


def _backtrack(pos: np.ndarray, rel: np.ndarray, cost, last: int) -> list[int]:
    k = len(pos)
    order = [last]
    mask = (1 << k) - 1
    size = k
    while size > 1:
        cur = cost[mask * k + last]
        pm = mask ^ (1 << last)
        nxt = -1
        for prev in range(k):
            if not (pm >> prev) & 1:
                continue
            c = cost[pm * k + prev] + abs(pos[last] - pos[prev])
            if c < rel[last]:
                c = rel[last]
            if c == cur:
                nxt = prev
                break
        if nxt < 0:  # defensive: exact replay failed, fall back to tolerance
            for prev in range(k):
                if not (pm >> prev) & 1:
                    continue
                c = cost[pm * k + prev] + abs(pos[last] - pos[prev])
                if c < rel[last]:
                    c = rel[last]
                if abs(c - cur) <= 1e-9:
                    nxt = prev
                    break
        if nxt < 0:
            raise AssertionError("Held-Karp backtrack lost the optimal chain")
        mask, last = pm, nxt
        order.append(last)
        size -= 1
    order.reverse()
    return order


try:  # compiled kernel; the pure version remains both fallback and test oracle
    from numba import njit

    @njit(cache=True)
    def _hk_kernel(pos, rel):  # pragma: no cover - exercised via wrapper
        k = pos.shape[0]
        full = (1 << k) - 1
        cost = np.full((full + 1) * k, _HK_INF)
        for i in range(k):
            c = abs(pos[i])
            if c < rel[i]:
                c = rel[i]
            cost[(1 << i) * k + i] = c
        for size in range(2, k + 1):
            mask = (1 << size) - 1
            while mask <= full:
                base = mask * k
                for last in range(k):
                    if not (mask >> last) & 1:
                        continue
                    pm = mask ^ (1 << last)
                    pbase = pm * k
                    pl = pos[last]
                    best = _HK_INF
                    for prev in range(k):
                        if not (pm >> prev) & 1:
                            continue
                        c = cost[pbase + prev] + abs(pl - pos[prev])
                        if c < best:
                            best = c
                    if best < rel[last]:
                        best = rel[last]
                    cost[base + last] = best
                c2 = mask & (-mask)
                r2 = mask + c2
                mask = (((r2 ^ mask) >> 2) // c2) | r2
        final = np.empty(k)
        for i in range(k):
            final[i] = cost[full * k + i]
        return final, cost

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False


def _held_karp(pos: np.ndarray, rel: np.ndarray):
    if _HAVE_NUMBA and len(pos) >= _NUMBA_THRESHOLD:
        return _hk_kernel(pos, rel)
    return _pure_held_karp(pos, rel)


# ---------------------------------------------------------------------------
# Ender expansion: a label can finish an optimal open schedule iff it sits on a
# position where some optimal core order ends and is released by the optimum.


def _expand_enders(inst: Instance, ender_positions: Iterable[float], opt: float) -> frozenset[int]:
    eps = list(ender_positions)
    out = set()
    for r in inst.requests:
        if r.release_time <= opt + TOL and any(abs(r.position - p) <= TOL for p in eps):
            out.add(r.label)
    return frozenset(out)


def _solve_core(inst: Instance, kept: list[Request], solver: str):
    """Shared solve on a pruned core; returns an OracleResult."""
    closed = inst.variant is Variant.CLOSED
    k = len(kept)
    if k == 0:
        enders = frozenset() if closed else _expand_enders(inst, [0.0], 0.0)
        return OracleResult(0.0, (), enders)

    pos = np.array([r.position for r in kept], dtype=np.float64)
    rel = np.array([r.release_time for r in kept], dtype=np.float64)

    if solver == "bruteforce":
        final, best_orders = _exhaustive(pos, rel, closed)
        opt = min(final[i] + (abs(pos[i]) if closed else 0.0) for i in range(k) if final[i] < _HK_INF)
        order_idx = best_orders[
            min(
                (i for i in range(k) if final[i] < _HK_INF),
                key=lambda i: (final[i] + (abs(pos[i]) if closed else 0.0), i),
            )
        ]
    else:
        final, cost = _held_karp(pos, rel)
        totals = final + np.abs(pos) if closed else final
        opt = float(np.min(totals))
        best_last = int(np.argmin(totals))
        order_idx = _backtrack(pos, rel, cost, best_last)
        del cost

    if closed:
        enders: frozenset[int] = frozenset()
    else:
        lasts = [i for i in range(k) if final[i] <= opt + TOL]
        enders = _expand_enders(inst, (pos[i] for i in lasts), opt)
    order = tuple(kept[i].label for i in order_idx)
    return OracleResult(float(opt), order, enders)


def _exhaustive(pos: np.ndarray, rel: np.ndarray, closed: bool):
    """Depth-first enumeration over serve orders with a best+tolerance prefix cut.

    Returns (best open-chain value per final index, a witness order per final
    index).  The cut keeps every order within 1e-9 of optimal, so ender ties
    survive.
    """
    k = len(pos)
    final = np.full(k, _HK_INF)
    orders: dict[int, list[int]] = {}
    best_total = [np.inf]
    prefix: list[int] = []

    def visit(t: float, x: float, remaining: int):
        if t > best_total[0] + TOL:
            return
        if remaining == 0:
            last = prefix[-1]
            total = t + (abs(x) if closed else 0.0)
            if total < best_total[0]:
                best_total[0] = total
            if t < final[last]:
                final[last] = t
                orders[last] = prefix.copy()
            return
        for i in range(k):
            if (remaining >> i) & 1:
                nt = t + abs(pos[i] - x)
                if nt < rel[i]:
                    nt = rel[i]
                prefix.append(i)
                visit(nt, pos[i], remaining ^ (1 << i))
                prefix.pop()

    visit(0.0, 0.0, (1 << k) - 1)
    return final, orders


# ---------------------------------------------------------------------------
# Public operations.


def opt_bruteforce(instance: Instance, prune: bool = True) -> OracleResult:
    """Exhaustive exact optimum; the independent reference oracle (small n)."""
    inst = normalize_instance(instance)
    if prune:
        kept, _ = prune_requests(inst.requests, inst.variant)
    else:
        kept = sorted(inst.requests, key=lambda r: r.label)
    if len(kept) > _BRUTE_LIMIT:
        raise SizeError(
            f"instance too large for brute force: {len(kept)} requests after pruning (limit {_BRUTE_LIMIT})"
        )
    return _solve_core(inst, kept, "bruteforce")


def opt_dp(instance: Instance, prune: bool = True) -> OracleResult:
    """(subset, last) dynamic program on the pruned core; handles n <= 22."""
    inst = normalize_instance(instance)
    if prune:
        kept, _ = prune_requests(inst.requests, inst.variant)
    else:
        kept = sorted(inst.requests, key=lambda r: r.label)
    if len(kept) > _DP_LIMIT:
        raise SizeError(
            f"instance too large for the DP oracle: {len(kept)} requests after pruning (limit {_DP_LIMIT})"
        )
    return _solve_core(inst, kept, "dp")


def delta_inputs(instance: Instance) -> tuple[frozenset[int], dict[int, float]]:
    """Ender set plus, for every label, the distance from its true position to
    the nearest ender position (the raw ingredient of the final-request error)."""
    inst = normalize_instance(instance)
    if inst.variant is not Variant.OPEN:
        raise UnsupportedVariantError("final-request error inputs are defined for the open variant only")
    result = opt_dp(inst)
    by = inst.by_label()
    ender_positions = sorted({by[l].position for l in result.ender_set})
    dists = {
        r.label: min(abs(r.position - p) for p in ender_positions) for r in inst.requests
    }
    return result.ender_set, dists
