"""Random-instance sweeps over prediction error, and their report artifacts.

The generator draws instances with forced extremes at -1 and a random c' in
[1, c]; everything else about an experiment is derived deterministically from
one integer seed through ``numpy.random.SeedSequence`` stream splitting (one
child stream per instance index), so reruns and any parallel schedule agree
bit for bit.  The draw order inside one instance stream is part of the file
format: request count, right extreme, interior positions, release times, then
the mould seed.

A sweep prices each instance once per variant with the exact oracle and then
replays it at every target error level: the far-first rule on the closed
variant, the near-first rule on the open variant, and the pivot rule once per
candidate final label.  Pivot consults its predicted final request only
through the run-constant comparison ``predicted position > midpoint of all
predicted positions``, so labels on the same side of that midpoint produce
identical runs; the sweep simulates each side at most once and fans the
result out to the per-label rows (the test suite checks this shortcut against
direct per-label simulation).  Every row records the theorem bound at its own
measured errors, which makes "no row beats its guarantee" a column compare.
"""

from __future__ import annotations

import csv
import math
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    Instance,
    PredictionSet,
    Request,
    ValidationError,
    Variant,
    normalize_instance,
)
from .engine import check_invariants, competitive_ratio, simulate_instance
from .oracle import OracleResult, opt_dp
from .predictions import Mould, apply_mould, delta_error, eta_error, gen_mould
from .algorithms import ratio_guarantee

DEFAULT_COUNT = 7500
ETA_GRID: tuple[float, ...] = tuple(i / 20 for i in range(21))
SWEEP_ALGOS: tuple[str, ...] = ("farfirst", "nearfirst", "pivot")
PCT_GRID: tuple[float, ...] = tuple(float(p) for p in range(5, 101, 5))

_VARIANT_FOR = {
    "farfirst": Variant.CLOSED,
    "nearfirst": Variant.OPEN,
    "pivot": Variant.OPEN,
}


@dataclass(frozen=True)
class GenParams:
    """Generator knobs: request budget, right-extreme cap, release cap, seed."""

    n_max: int = 20
    c: float = 2.0
    r_max: float = 6.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_max", int(self.n_max))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "r_max", float(self.r_max))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n_max < 2:
            raise ValidationError(f"n_max must be at least 2, got {self.n_max}")
        if self.c < 1.0:
            raise ValidationError(f"c must be at least 1, got {self.c}")
        if self.r_max < 0.0:
            raise ValidationError(f"r_max must be nonnegative, got {self.r_max}")
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")


def gen_instance(params: GenParams, rng: np.random.Generator) -> Instance:
    """One random open-variant instance: labels 1 and 2 are the forced
    extremes at -1 and c', labels 3..n are interior, all releases uniform on
    [0, r_max].  Normalisation appends the origin request as label 0."""
    n = int(rng.integers(2, params.n_max + 1))
    c_prime = float(rng.uniform(1.0, params.c))
    positions = [-1.0, c_prime]
    positions.extend(float(p) for p in rng.uniform(-1.0, c_prime, size=n - 2))
    releases = [float(r) for r in rng.uniform(0.0, params.r_max, size=n)]
    requests = tuple(
        Request(i + 1, positions[i], releases[i]) for i in range(n)
    )
    return normalize_instance(Instance(Variant.OPEN, requests))


def draw_mould(instance: Instance, rng: np.random.Generator) -> Mould:
    """The instance's mould: one scalar per non-origin label, seeded by the
    next draw of the instance's own stream (so instance and mould travel
    together under one seed)."""
    n_scalars = len(normalize_instance(instance).requests) - 1
    return gen_mould(n_scalars, int(rng.integers(1 << 31)))


# ---------------------------------------------------------------------------
# Sweep rows, stored columnar (a full default sweep holds ~2M rows).


@dataclass(frozen=True)
class SweepRow:
    instance_id: int
    algorithm: str
    eta: float
    delta: Optional[float]
    ratio: float
    opt: float
    makespan: float
    bound: float


class SweepTable:
    """Columnar rows plus the sweep's simulation/verification counters.

    Behaves as a read-only sequence of :class:`SweepRow`; the numpy columns
    are exposed directly for vectorised checks.  ``delta`` is NaN on rows of
    algorithms without a final-label prediction.
    """

    __slots__ = (
        "instance_id",
        "algo_code",
        "eta",
        "delta",
        "ratio",
        "opt",
        "makespan",
        "bound",
        "sims_total",
        "sims_checked",
    )

    def __init__(
        self,
        instance_id,
        algo_code,
        eta,
        delta,
        ratio,
        opt,
        makespan,
        bound,
        *,
        sims_total: int = 0,
        sims_checked: int = 0,
    ) -> None:
        self.instance_id = np.asarray(instance_id, dtype=np.int64)
        self.algo_code = np.asarray(algo_code, dtype=np.uint8)
        self.eta = np.asarray(eta, dtype=np.float64)
        self.delta = np.asarray(delta, dtype=np.float64)
        self.ratio = np.asarray(ratio, dtype=np.float64)
        self.opt = np.asarray(opt, dtype=np.float64)
        self.makespan = np.asarray(makespan, dtype=np.float64)
        self.bound = np.asarray(bound, dtype=np.float64)
        self.sims_total = int(sims_total)
        self.sims_checked = int(sims_checked)
        n = len(self.instance_id)
        for name in ("algo_code", "eta", "delta", "ratio", "opt", "makespan", "bound"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"column {name} has mismatched length")
        if self.algo_code.size and int(self.algo_code.max()) >= len(SWEEP_ALGOS):
            raise ValidationError("unknown algorithm code in table")

    def __len__(self) -> int:
        return len(self.instance_id)

    def __getitem__(self, i: int) -> SweepRow:
        d = float(self.delta[i])
        return SweepRow(
            instance_id=int(self.instance_id[i]),
            algorithm=SWEEP_ALGOS[int(self.algo_code[i])],
            eta=float(self.eta[i]),
            delta=None if math.isnan(d) else d,
            ratio=float(self.ratio[i]),
            opt=float(self.opt[i]),
            makespan=float(self.makespan[i]),
            bound=float(self.bound[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def filter(self, algorithm: Optional[str] = None) -> "SweepTable":
        if algorithm is None:
            mask = np.ones(len(self), dtype=bool)
        else:
            if algorithm not in SWEEP_ALGOS:
                raise ValidationError(f"unknown sweep algorithm {algorithm!r}")
            mask = self.algo_code == SWEEP_ALGOS.index(algorithm)
        return SweepTable(
            self.instance_id[mask],
            self.algo_code[mask],
            self.eta[mask],
            self.delta[mask],
            self.ratio[mask],
            self.opt[mask],
            self.makespan[mask],
            self.bound[mask],
        )

    def theorem_violations(self, tol: float = 1e-6) -> np.ndarray:
        """Indices of rows whose ratio beats their own guarantee column."""
        return np.flatnonzero(self.ratio > self.bound + tol)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        names = SWEEP_ALGOS
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(
                ["instance_id", "algorithm", "eta", "delta", "ratio", "opt", "makespan", "bound"]
            )
            for i in range(len(self)):
                d = self.delta[i]
                w.writerow(
                    [
                        int(self.instance_id[i]),
                        names[self.algo_code[i]],
                        repr(float(self.eta[i])),
                        "" if math.isnan(d) else repr(float(d)),
                        repr(float(self.ratio[i])),
                        repr(float(self.opt[i])),
                        repr(float(self.makespan[i])),
                        repr(float(self.bound[i])),
                    ]
                )
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "SweepTable":
        cols: dict[str, list] = {k: [] for k in ("id", "algo", "eta", "delta", "ratio", "opt", "mk", "bd")}
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["instance_id", "algorithm", "eta", "delta", "ratio", "opt", "makespan", "bound"]:
                raise ValidationError(f"unrecognised sweep CSV header: {header}")
            for row in reader:
                if row[1] not in SWEEP_ALGOS:
                    raise ValidationError(f"unknown algorithm {row[1]!r} in sweep CSV")
                cols["id"].append(int(row[0]))
                cols["algo"].append(SWEEP_ALGOS.index(row[1]))
                cols["eta"].append(float(row[2]))
                cols["delta"].append(math.nan if row[3] == "" else float(row[3]))
                cols["ratio"].append(float(row[4]))
                cols["opt"].append(float(row[5]))
                cols["mk"].append(float(row[6]))
                cols["bd"].append(float(row[7]))
        return cls(
            cols["id"], cols["algo"], cols["eta"], cols["delta"],
            cols["ratio"], cols["opt"], cols["mk"], cols["bd"],
        )


def _verify_sim(sim, inst: Instance) -> None:
    check_invariants(sim, inst)
    if inst.variant is Variant.CLOSED and abs(sim.trajectory.end_pos) > 1e-9:
        raise AssertionError(
            f"closed-variant run ends at {sim.trajectory.end_pos!r}, not at the origin"
        )


def sweep(
    params: GenParams,
    count: int = DEFAULT_COUNT,
    etas: Sequence[float] = ETA_GRID,
    algos: Sequence[str] = SWEEP_ALGOS,
    check: bool = True,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SweepTable:
    """Generate ``count`` instances and run each requested algorithm at every
    target error.

    Row order is canonical — instance index, then algorithm in the fixed
    ``SWEEP_ALGOS`` order, then eta ascending, then (for pivot) the candidate
    final label ascending — so equal seeds give byte-identical CSVs.  With
    ``check`` every simulation is replayed through the engine invariants and
    closed runs are required to end at the origin; oracle size errors from
    oversized instances propagate.
    """
    count = int(count)
    if count < 1:
        raise ValidationError("count must be positive")
    etas = [float(e) for e in etas]
    if not etas:
        raise ValidationError("need at least one eta target")
    if any(e < 0.0 for e in etas):
        raise ValidationError("eta targets must be nonnegative")
    wanted = set(algos)
    if not wanted:
        raise ValidationError("need at least one algorithm")
    unknown = wanted.difference(SWEEP_ALGOS)
    if unknown:
        raise ValidationError(
            f"sweep covers only {'/'.join(SWEEP_ALGOS)}; got {sorted(unknown)}"
        )
    run = [a for a in SWEEP_ALGOS if a in wanted]

    col_id = array("q")
    col_algo = array("B")
    col_eta = array("d")
    col_delta = array("d")
    col_ratio = array("d")
    col_opt = array("d")
    col_mk = array("d")
    col_bd = array("d")
    sims_total = 0
    sims_checked = 0

    def emit(idx, code, eta, delta, ratio, opt, mk, bd):
        col_id.append(idx)
        col_algo.append(code)
        col_eta.append(eta)
        col_delta.append(delta)
        col_ratio.append(ratio)
        col_opt.append(opt)
        col_mk.append(mk)
        col_bd.append(bd)

    for idx, child in enumerate(np.random.SeedSequence(params.seed).spawn(count)):
        rng = np.random.Generator(np.random.PCG64(child))
        inst = gen_instance(params, rng)
        mould = draw_mould(inst, rng)
        labels = sorted(r.label for r in inst.requests)

        oracle_open: Optional[OracleResult] = None
        oracle_closed: Optional[OracleResult] = None
        if "nearfirst" in run or "pivot" in run:
            oracle_open = opt_dp(inst)
        if "farfirst" in run:
            oracle_closed = opt_dp(inst.with_variant(Variant.CLOSED))

        delta_by_label: dict[int, float] = {}
        if "pivot" in run:
            # the final-label error depends only on true positions and the
            # ender set, never on the prediction offsets, so one pass covers
            # every eta level
            exact = apply_mould(inst, mould, 0.0)
            for f in labels:
                probe = inst.with_predictions(PredictionSet(exact.positions, final_label=f))
                delta_by_label[f] = float(delta_error(probe, oracle_open).delta)

        for eta_target in etas:
            preds = apply_mould(inst, mould, eta_target)
            inst_p = inst.with_predictions(preds)
            eta_meas = eta_error(inst_p).eta

            if "farfirst" in run:
                ic = inst_p.with_variant(Variant.CLOSED)
                sim = simulate_instance(ic, "farfirst")
                sims_total += 1
                if check:
                    _verify_sim(sim, ic)
                    sims_checked += 1
                ratio = competitive_ratio(sim, oracle_closed)
                emit(idx, 0, eta_meas, math.nan, ratio,
                     oracle_closed.opt_makespan, sim.makespan,
                     ratio_guarantee("farfirst", eta_meas))

            if "nearfirst" in run:
                sim = simulate_instance(inst_p, "nearfirst")
                sims_total += 1
                if check:
                    _verify_sim(sim, inst_p)
                    sims_checked += 1
                ratio = competitive_ratio(sim, oracle_open)
                emit(idx, 1, eta_meas, math.nan, ratio,
                     oracle_open.opt_makespan, sim.makespan,
                     ratio_guarantee("nearfirst", eta_meas))

            if "pivot" in run:
                values = list(preds.positions.values())
                midpoint = (max(values) + min(values)) / 2.0
                per_side: dict[bool, object] = {}
                for f in labels:
                    side = preds.position_of(f) > midpoint
                    if side not in per_side:
                        ip = inst.with_predictions(
                            PredictionSet(preds.positions, final_label=f)
                        )
                        sim = simulate_instance(ip, "pivot")
                        sims_total += 1
                        if check:
                            _verify_sim(sim, ip)
                            sims_checked += 1
                        per_side[side] = sim
                    sim = per_side[side]
                    ratio = competitive_ratio(sim, oracle_open)
                    d = delta_by_label[f]
                    emit(idx, 2, eta_meas, d, ratio,
                         oracle_open.opt_makespan, sim.makespan,
                         ratio_guarantee("pivot", eta_meas, d))

        if progress is not None:
            progress(idx + 1, count)

    return SweepTable(
        np.frombuffer(col_id, dtype=np.int64),
        np.frombuffer(col_algo, dtype=np.uint8),
        np.frombuffer(col_eta, dtype=np.float64),
        np.frombuffer(col_delta, dtype=np.float64),
        np.frombuffer(col_ratio, dtype=np.float64),
        np.frombuffer(col_opt, dtype=np.float64),
        np.frombuffer(col_mk, dtype=np.float64),
        np.frombuffer(col_bd, dtype=np.float64),
        sims_total=sims_total,
        sims_checked=sims_checked,
    )


# ---------------------------------------------------------------------------
# Reductions for the report figures.


def _error_ratio_columns(rows, need_delta: bool = False):
    if isinstance(rows, SweepTable):
        eta, ratio, delta = rows.eta, rows.ratio, rows.delta
    else:
        listed = list(rows)
        eta = np.array([r.eta for r in listed], dtype=np.float64)
        ratio = np.array([r.ratio for r in listed], dtype=np.float64)
        delta = np.array(
            [math.nan if r.delta is None else r.delta for r in listed], dtype=np.float64
        )
    if eta.size == 0:
        raise ValidationError("no rows to reduce")
    if need_delta and np.isnan(delta).any():
        raise ValidationError("rows without a final-label error in a delta reduction")
    return eta, ratio, delta


def max_ratio_curve(rows) -> list[tuple[float, float]]:
    """Cumulative worst ratio by error level: (eta, max ratio over rows whose
    eta is at most that value), one point per distinct row eta."""
    eta, ratio, _ = _error_ratio_columns(rows)
    order = np.lexsort((ratio, eta))
    eta_sorted = eta[order]
    running = np.maximum.accumulate(ratio[order])
    points = np.unique(eta_sorted)
    last = np.searchsorted(eta_sorted, points, side="right") - 1
    return [(float(e), float(running[i])) for e, i in zip(points, last)]


def percentile_grid(
    rows,
    eta_buckets: Sequence[float],
    pct_buckets: Sequence[float],
) -> np.ndarray:
    """Grid of worst ratios over the globally best x% of rows, error-capped.

    Rows are ranked once by ratio ascending (ties broken by eta, then input
    order, for determinism); cell (x, eta) is the worst ratio among ranked
    prefix rows whose error is at most eta.  Prefixes nest in x and the error
    filter nests in eta, so cells are nondecreasing along both axes.  Cells
    whose intersection is empty are NaN.
    """
    eta, ratio, _ = _error_ratio_columns(rows)
    eta_buckets = [float(b) for b in eta_buckets]
    pct_buckets = [float(p) for p in pct_buckets]
    if not eta_buckets or not pct_buckets:
        raise ValidationError("grid needs at least one bucket per axis")
    if any(p <= 0.0 or p > 100.0 for p in pct_buckets):
        raise ValidationError("percentile buckets must lie in (0, 100]")
    n = len(ratio)
    order = np.lexsort((np.arange(n), eta, ratio))
    out = np.full((len(pct_buckets), len(eta_buckets)), np.nan)
    for i, pct in enumerate(pct_buckets):
        k = min(n, math.ceil(pct / 100.0 * n))
        sel = order[:k]
        es, rs = eta[sel], ratio[sel]
        for j, eb in enumerate(eta_buckets):
            mask = es <= eb
            if mask.any():
                out[i, j] = rs[mask].max()
    return out


def joint_error_grid(
    rows,
    delta_buckets: Sequence[float],
    eta_buckets: Sequence[float],
) -> np.ndarray:
    """Worst ratio under joint error caps: cell (delta, eta) is the max ratio
    among rows with both errors at most the cell's caps (NaN when none
    qualify).  Needs rows carrying a final-label error."""
    eta, ratio, delta = _error_ratio_columns(rows, need_delta=True)
    delta_buckets = [float(b) for b in delta_buckets]
    eta_buckets = [float(b) for b in eta_buckets]
    if not delta_buckets or not eta_buckets:
        raise ValidationError("grid needs at least one bucket per axis")
    out = np.full((len(eta_buckets), len(delta_buckets)), np.nan)
    for i, eb in enumerate(eta_buckets):
        emask = eta <= eb
        ds, rs = delta[emask], ratio[emask]
        for j, db in enumerate(delta_buckets):
            mask = ds <= db
            if mask.any():
                out[i, j] = rs[mask].max()
    return out


# ---------------------------------------------------------------------------
# Rendering: headered CSV and self-contained SVG, no plotting dependency.


@dataclass(frozen=True)
class Curve:
    points: tuple[tuple[float, float], ...]
    xlabel: str = "eta"
    ylabel: str = "max_ratio"

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValidationError("a curve needs at least one point")


@dataclass(frozen=True)
class Grid:
    values: np.ndarray  # shape (len(y), len(x))
    x: tuple[float, ...]
    y: tuple[float, ...]
    xlabel: str = "eta"
    ylabel: str = "best_pct"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if not self.x or not self.y:
            raise ValidationError("a grid needs at least one cell")
        if vals.shape != (len(self.y), len(self.x)):
            raise ValidationError(
                f"grid values shape {vals.shape} != (len(y), len(x)) = ({len(self.y)}, {len(self.x)})"
            )


# Fixed ratio-to-colour scale over [1, 3]: blue through amber to deep red,
# clamped outside, neutral grey for empty cells.
_COLOR_STOPS: tuple[tuple[float, tuple[int, int, int]], ...] = (
    (0.0, (49, 54, 149)),
    (1.0 / 3.0, (116, 173, 209)),
    (2.0 / 3.0, (253, 174, 97)),
    (1.0, (165, 0, 38)),
)
_NAN_COLOR = "#d9d9d9"
COLOR_SCALE_RANGE = (1.0, 3.0)


def ratio_color(ratio: float) -> str:
    if math.isnan(ratio):
        return _NAN_COLOR
    lo, hi = COLOR_SCALE_RANGE
    t = min(1.0, max(0.0, (ratio - lo) / (hi - lo)))
    for (t0, c0), (t1, c1) in zip(_COLOR_STOPS, _COLOR_STOPS[1:]):
        if t <= t1:
            w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            r, g, b = (round(a + (b_ - a) * w) for a, b_ in zip(c0, c1))
            return f"#{r:02x}{g:02x}{b:02x}"
    r, g, b = _COLOR_STOPS[-1][1]
    return f"#{r:02x}{g:02x}{b:02x}"


def _curve_csv(curve: Curve) -> str:
    lines = [f"{curve.xlabel},{curve.ylabel}"]
    lines.extend(f"{repr(x)},{repr(y)}" for x, y in curve.points)
    return "\n".join(lines) + "\n"


def _grid_csv(grid: Grid) -> str:
    lines = [f"{grid.xlabel},{grid.ylabel},max_ratio"]
    for i, yv in enumerate(grid.y):
        for j, xv in enumerate(grid.x):
            v = grid.values[i, j]
            cell = "" if math.isnan(v) else repr(float(v))
            lines.append(f"{repr(xv)},{repr(yv)},{cell}")
    return "\n".join(lines) + "\n"


def _curve_svg(curve: Curve) -> str:
    width, height = 640, 420
    ml, mr, mt, mb = 60, 20, 30, 45
    pts = sorted(curve.points)
    xs = [p[0] for p in pts]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    ylo, yhi = COLOR_SCALE_RANGE

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        y = min(yhi, max(ylo, y))
        return height - mb - (y - ylo) / (yhi - ylo) * (height - mt - mb)

    # step curve: hold each level until the next error point
    coords = []
    for k, (x, y) in enumerate(pts):
        if k:
            coords.append(f"{sx(x):.2f},{sy(pts[k - 1][1]):.2f}")
        coords.append(f"{sx(x):.2f},{sy(y):.2f}")
    svg = f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">\n'
    svg += f'  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    for frac in (0.0, 0.5, 1.0):
        yv = ylo + frac * (yhi - ylo)
        yy = sy(yv)
        svg += f'  <line x1="{ml}" y1="{yy:.2f}" x2="{width - mr}" y2="{yy:.2f}" stroke="#cccccc" stroke-width="1"/>\n'
        svg += f'  <text x="{ml - 8}" y="{yy + 4:.2f}" text-anchor="end" font-size="12">{yv:g}</text>\n'
        xv = x0 + frac * (x1 - x0)
        xx = sx(xv)
        svg += f'  <text x="{xx:.2f}" y="{height - mb + 18}" text-anchor="middle" font-size="12">{xv:g}</text>\n'
    svg += f'  <line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>\n'
    svg += f'  <line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>\n'
    svg += f'  <polyline points="{" ".join(coords)}" fill="none" stroke="#b2182b" stroke-width="2"/>\n'
    svg += f'  <text x="{(ml + width - mr) / 2}" y="{height - 8}" text-anchor="middle" font-size="13">{curve.xlabel}</text>\n'
    svg += f'  <text x="16" y="{(mt + height - mb) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {(mt + height - mb) / 2})">{curve.ylabel}</text>\n'
    svg += "</svg>\n"
    return svg


def _grid_svg(grid: Grid) -> str:
    cell = 22
    ml, mr, mt, mb = 60, 80, 30, 45
    nx, ny = len(grid.x), len(grid.y)
    width = ml + nx * cell + mr
    height = mt + ny * cell + mb
    svg = f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">\n'
    svg += f'  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    # y runs bottom-up so larger bucket values sit higher, as on a plot axis
    for i in range(ny):
        for j in range(nx):
            color = ratio_color(float(grid.values[i, j]))
            px = ml + j * cell
            py = mt + (ny - 1 - i) * cell
            svg += f'  <rect class="cell" x="{px}" y="{py}" width="{cell}" height="{cell}" fill="{color}"/>\n'
    svg += f'  <text x="{ml - 8}" y="{mt + ny * cell:.0f}" text-anchor="end" font-size="11">{grid.y[0]:g}</text>\n'
    if ny > 1:
        svg += f'  <text x="{ml - 8}" y="{mt + 12}" text-anchor="end" font-size="11">{grid.y[-1]:g}</text>\n'
    svg += f'  <text x="{ml}" y="{mt + ny * cell + 16}" text-anchor="middle" font-size="11">{grid.x[0]:g}</text>\n'
    if nx > 1:
        svg += f'  <text x="{ml + nx * cell}" y="{mt + ny * cell + 16}" text-anchor="middle" font-size="11">{grid.x[-1]:g}</text>\n'
    svg += f'  <text x="{ml + nx * cell / 2}" y="{height - 8}" text-anchor="middle" font-size="13">{grid.xlabel}</text>\n'
    svg += f'  <text x="16" y="{mt + ny * cell / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {mt + ny * cell / 2})">{grid.ylabel}</text>\n'
    # colour legend, low at the bottom
    lx = ml + nx * cell + 24
    steps = 40
    lh = max(ny * cell, 80)
    for s in range(steps):
        frac = s / (steps - 1)
        val = COLOR_SCALE_RANGE[0] + frac * (COLOR_SCALE_RANGE[1] - COLOR_SCALE_RANGE[0])
        py = mt + lh - (s + 1) * lh / steps
        svg += f'  <rect x="{lx}" y="{py:.2f}" width="14" height="{lh / steps + 0.5:.2f}" fill="{ratio_color(val)}"/>\n'
    svg += f'  <text x="{lx + 20}" y="{mt + lh:.0f}" font-size="11">{COLOR_SCALE_RANGE[0]:g}</text>\n'
    svg += f'  <text x="{lx + 20}" y="{mt + 10}" font-size="11">{COLOR_SCALE_RANGE[1]:g}</text>\n'
    svg += "</svg>\n"
    return svg


def render(data: Union[Curve, Grid], fmt: str, path: Union[str, Path]) -> Path:
    """Write ``data`` as ``fmt`` ("csv" or "svg") to ``path``."""
    if not isinstance(data, (Curve, Grid)):
        raise ValidationError("render expects a Curve or a Grid")
    if fmt == "csv":
        text = _curve_csv(data) if isinstance(data, Curve) else _grid_csv(data)
    elif fmt == "svg":
        text = _curve_svg(data) if isinstance(data, Curve) else _grid_svg(data)
    else:
        raise ValidationError(f"unknown render format {fmt!r} (want csv or svg)")
    path = Path(path)
    path.write_text(text)
    return path


def parse_csv(path: Union[str, Path]) -> Union[Curve, Grid]:
    """Inverse of :func:`render` for the CSV format (two columns reload as a
    curve, three as a grid)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or len(header) not in (2, 3):
            raise ValidationError(f"unrecognised rendered CSV header: {header}")
        body = [row for row in reader if row]
    if not body:
        raise ValidationError("rendered CSV has no data rows")
    if len(header) == 2:
        pts = tuple((float(a), float(b)) for a, b in body)
        return Curve(points=pts, xlabel=header[0], ylabel=header[1])
    xs: list[float] = []
    ys: list[float] = []
    for a, b, _ in body:
        xa, yb = float(a), float(b)
        if xa not in xs:
            xs.append(xa)
        if yb not in ys:
            ys.append(yb)
    values = np.full((len(ys), len(xs)), np.nan)
    for a, b, v in body:
        values[ys.index(float(b)), xs.index(float(a))] = math.nan if v == "" else float(v)
    return Grid(values=values, x=tuple(xs), y=tuple(ys), xlabel=header[0], ylabel=header[1])
