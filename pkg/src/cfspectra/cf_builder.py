"""Cut-and-stack tower schedules: cut-set shapes, chaining and validation.

A stage takes the current tower of height h and cuts it into r columns; the
cut set lists the base offset of every column inside the next tower.  Three
shapes are generated here:

* ``rigid_staircase_cut``   -- an arithmetic run of i columns (no spacers)
  followed by a staircase run where column j gets j extra spacers;
* ``delayed_staircase_cut`` -- arithmetic run, then i columns with exactly
  one spacer each, then a staircase run;
* ``staircase_cut``         -- pure staircase (column i gets i spacers).

Heights chain minimally: the next height is the last cut plus the current
height, so there are never spacers above the last column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParameterError, ScheduleError

KIND_RIGID_STAIRCASE = "rigid_staircase"
KIND_DELAYED_STAIRCASE = "delayed_staircase"
KIND_STAIRCASE = "staircase"

REGIME_RIGID = "rigid"
REGIME_OFFSET = "offset"
REGIME_STAIRCASE = "staircase"


@dataclass(frozen=True)
class CFStage:
    """One cutting stage: base height, cut offsets and their regime tags."""

    index: int
    base_height: int
    cuts: tuple[int, ...]
    i_count: int
    r_count: int
    kind: str
    regimes: tuple[str, ...]
    delta: Fraction | None = None
    block: int | None = None

    def __post_init__(self):
        if self.cuts[0] != 0:
            raise ParameterError("first cut must be 0")
        if len(self.cuts) != self.r_count or self.r_count < 2:
            raise ParameterError("need r > 1 cuts")
        if list(self.cuts) != sorted(set(self.cuts)):
            raise ParameterError("cuts must be strictly increasing")

    @property
    def new_height(self) -> int:
        return self.base_height + self.cuts[-1]

    def min_gap(self) -> int:
        return min(b - a for a, b in zip(self.cuts, self.cuts[1:]))

    def spacer_count(self) -> int:
        """Levels of the next tower not covered by any column."""
        return self.new_height - self.r_count * self.base_height

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "base_height": self.base_height,
            "cuts": list(self.cuts),
            "i_count": self.i_count,
            "r_count": self.r_count,
            "kind": self.kind,
            "regimes": list(self.regimes),
            "delta": [self.delta.numerator, self.delta.denominator] if self.delta else None,
            "block": self.block,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CFStage":
        return cls(
            index=d["index"],
            base_height=d["base_height"],
            cuts=tuple(d["cuts"]),
            i_count=d["i_count"],
            r_count=d["r_count"],
            kind=d["kind"],
            regimes=tuple(d["regimes"]),
            delta=Fraction(*d["delta"]) if d.get("delta") else None,
            block=d.get("block"),
        )


def rigid_staircase_cut(
    h: int, i: int, r: int, *, index: int = 1, delta=None, block=None
) -> CFStage:
    """Arithmetic run of i columns, then staircase; step j of the staircase adds j spacers."""
    if not (0 < i <= r) or r < 2:
        raise ParameterError(f"need 0 < i <= r and r > 1, got i={i}, r={r}")
    cuts, regimes = [0], [REGIME_RIGID]
    for j in range(1, r):
        if j < i:
            cuts.append(cuts[-1] + h)
            regimes.append(REGIME_RIGID)
        else:
            cuts.append(cuts[-1] + h + (j - i))
            regimes.append(REGIME_STAIRCASE)
    return CFStage(index, h, tuple(cuts), i, r, KIND_RIGID_STAIRCASE, tuple(regimes),
                   Fraction(delta) if delta is not None else None, block)


def delayed_staircase_cut(
    h: int, i: int, r: int, *, index: int = 1, delta=None, block=None
) -> CFStage:
    """Arithmetic run, then i columns with one spacer each, then staircase."""
    if not (0 < 2 * i <= r):
        raise ParameterError(f"need 0 < 2i <= r, got i={i}, r={r}")
    cuts, regimes = [0], [REGIME_RIGID]
    for j in range(1, r):
        if j < i:
            cuts.append(cuts[-1] + h)
            regimes.append(REGIME_RIGID)
        elif j < 2 * i:
            cuts.append(cuts[-1] + h + 1)
            regimes.append(REGIME_OFFSET)
        else:
            cuts.append(cuts[-1] + h + (j - 2 * i))
            regimes.append(REGIME_STAIRCASE)
    return CFStage(index, h, tuple(cuts), i, r, KIND_DELAYED_STAIRCASE, tuple(regimes),
                   Fraction(delta) if delta is not None else None, block)


def staircase_cut(h: int, r: int, *, index: int = 1, block=None) -> CFStage:
    """Pure staircase: cut j sits at j*h + j(j-1)/2 (column j carries j spacers)."""
    if r < 2:
        raise ParameterError(f"need r > 1, got r={r}")
    cuts = tuple(j * h + j * (j - 1) // 2 for j in range(r))
    regimes = (REGIME_RIGID,) + (REGIME_STAIRCASE,) * (r - 1)
    return CFStage(index, h, cuts, 0, r, KIND_STAIRCASE, regimes, None, block)


@dataclass(frozen=True)
class CFSchedule:
    """A chained sequence of stages; stage n maps the height-h_{n-1} tower into h_n."""

    initial_height: int
    stages: tuple[CFStage, ...]

    def __post_init__(self):
        h = self.initial_height
        for n, st in enumerate(self.stages, start=1):
            if st.base_height != h:
                raise ScheduleError(
                    f"stage {n} has base height {st.base_height}, expected {h}"
                )
            if st.index != n:
                raise ScheduleError(f"stage {n} carries index {st.index}")
            h = st.new_height

    @property
    def depth(self) -> int:
        return len(self.stages)

    def heights(self) -> list[int]:
        hs = [self.initial_height]
        for st in self.stages:
            hs.append(st.new_height)
        return hs

    def height(self, n: int) -> int:
        """h_n; n = 0 is the initial height."""
        return self.heights()[n]

    def truncate(self, depth: int) -> "CFSchedule":
        return CFSchedule(self.initial_height, self.stages[:depth])

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "initial_height": self.initial_height,
            "stages": [st.to_dict() for st in self.stages],
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CFSchedule":
        doc = json.loads(text)
        return cls(
            initial_height=doc["initial_height"],
            stages=tuple(CFStage.from_dict(d) for d in doc["stages"]),
        )


def build_schedule(initial_height: int, stage_specs) -> CFSchedule:
    """Chain stage factories; each spec is (factory_kwargs) consumed in order.

    stage_specs: iterable of dicts with keys kind ('rigid_staircase' |
    'delayed_staircase' | 'staircase'), r, and i/delta/block as applicable.
    """
    stages = []
    h = initial_height
    for n, spec in enumerate(stage_specs, start=1):
        kind = spec["kind"]
        if kind == KIND_RIGID_STAIRCASE:
            st = rigid_staircase_cut(h, spec["i"], spec["r"], index=n,
                                     delta=spec.get("delta"), block=spec.get("block"))
        elif kind == KIND_DELAYED_STAIRCASE:
            st = delayed_staircase_cut(h, spec["i"], spec["r"], index=n,
                                       delta=spec.get("delta"), block=spec.get("block"))
        elif kind == KIND_STAIRCASE:
            st = staircase_cut(h, spec["r"], index=n, block=spec.get("block"))
        else:
            raise ScheduleError(f"unknown stage kind {kind!r}")
        stages.append(st)
        h = st.new_height
    return CFSchedule(initial_height, tuple(stages))


# ---------------------------------------------------------------------------
# delta blocks
# ---------------------------------------------------------------------------


def rigid_count(delta: Fraction, r: int, kind: str = KIND_RIGID_STAIRCASE) -> int:
    """Number of rigid columns approximating delta * r.

    Rounds to nearest (so |i/r - delta| <= 1/r even after clamping to 1);
    the delayed shape additionally needs 2i <= r.
    """
    i = max(1, round(Fraction(delta) * r))
    if kind == KIND_DELAYED_STAIRCASE:
        i = min(i, r // 2)
    return i


@dataclass(frozen=True)
class DeltaBlock:
    """A run of stages sharing one rigidity fraction delta."""

    delta: Fraction
    size: int
    kinds: tuple[str, ...] | None = None  # per-stage kinds; default all rigid_staircase
    r_start: int | None = None  # default: max(2, 1-based block position)
    r_seq: tuple[int, ...] | None = None  # explicit per-stage counts, overrides r_start

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        if not 0 < self.delta < 1:
            raise ScheduleError(f"delta must be in (0,1), got {self.delta}")
        if self.size < 1:
            raise ScheduleError("block needs at least one stage")
        if self.kinds is not None and len(self.kinds) != self.size:
            raise ScheduleError("kinds must match block size")
        if self.r_seq is not None and len(self.r_seq) != self.size:
            raise ScheduleError("r_seq must match block size")

    def column_counts(self, position: int) -> list[int]:
        """Per-stage column counts for this block at its 1-based position."""
        if self.r_seq is not None:
            return list(self.r_seq)
        start = self.r_start if self.r_start is not None else max(2, position)
        return [start + j for j in range(self.size)]


def concat_delta_blocks(blocks, initial_height: int = 1) -> CFSchedule:
    """Concatenate delta blocks into one schedule.

    Deltas must be strictly decreasing across blocks.  Heights chain across
    the seams (each block starts from the previous block's final tower) and
    the column count inside block b runs r, r+1, ... starting from
    max(2, b) unless the block overrides r_start.
    """
    blocks = list(blocks)
    deltas = [Fraction(b.delta) for b in blocks]
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ScheduleError(f"deltas must be strictly decreasing, got {deltas}")
    specs = []
    for pos, blk in enumerate(blocks, start=1):
        for j, r in enumerate(blk.column_counts(pos)):
            kind = blk.kinds[j] if blk.kinds else KIND_RIGID_STAIRCASE
            spec = {"kind": kind, "r": r, "block": pos}
            if kind != KIND_STAIRCASE:
                spec["i"] = rigid_count(blk.delta, r, kind)
                spec["delta"] = blk.delta
            specs.append(spec)
    return build_schedule(initial_height, specs)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    stage_checks: list = field(default_factory=list)
    ratios: list = field(default_factory=list)  # h_n / prod(#C) as Fractions
    ratio_bound: float = 0.0
    ratio_bounded: bool = True
    spacer_fraction: Fraction = Fraction(0)
    mixing_ratios: list = field(default_factory=list)  # i_n^2 / h_{n-1}
    mixing_nonincreasing_from: int = 3
    mixing_trend_ok: bool = True
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        frac = lambda f: [f.numerator, f.denominator]
        return {
            "stage_checks": self.stage_checks,
            "ratios": [frac(r) for r in self.ratios],
            "ratio_bound": self.ratio_bound,
            "ratio_bounded": self.ratio_bounded,
            "spacer_fraction": frac(self.spacer_fraction),
            "mixing_ratios": [frac(r) for r in self.mixing_ratios],
            "mixing_trend_ok": self.mixing_trend_ok,
            "failures": self.failures,
            "warnings": self.warnings,
            "ok": self.ok,
        }


def validate(schedule: CFSchedule, ratio_bound: float = 100.0) -> ValidationReport:
    """Per-stage and global sanity checks; failures are carried, not raised."""
    rep = ValidationReport(ratio_bound=ratio_bound)
    cut_product = 1
    for st in schedule.stages:
        checks = {"index": st.index}
        checks["zero_in_cuts"] = st.cuts[0] == 0
        checks["count_gt_1"] = st.r_count > 1
        checks["columns_disjoint"] = st.min_gap() >= st.base_height
        checks["no_top_spacer"] = st.new_height == st.cuts[-1] + st.base_height
        if st.delta is not None and st.i_count > 0:
            err = abs(Fraction(st.i_count, st.r_count) - st.delta)
            checks["delta_tracking"] = err <= Fraction(1, st.r_count)
        if st.kind == KIND_STAIRCASE:
            diffs = [b - a for a, b in zip(st.cuts, st.cuts[1:])]
            checks["staircase_second_difference"] = all(
                d2 - d1 == 1 for d1, d2 in zip(diffs, diffs[1:])
            )
            rep.warnings.append(
                f"stage {st.index}: pure staircase (diagnostic-only shape, i=0)"
            )
        for name, good in checks.items():
            if name != "index" and not good:
                rep.failures.append(f"stage {st.index}: {name}")
        rep.stage_checks.append(checks)

        cut_product *= st.r_count
        rep.ratios.append(Fraction(st.new_height, cut_product * schedule.initial_height))
        rep.mixing_ratios.append(Fraction(st.i_count**2, st.base_height))

    if rep.ratios:
        if any(b < a for a, b in zip(rep.ratios, rep.ratios[1:])):
            rep.warnings.append("mass ratio decreased; schedule is not minimally chained")
        if float(rep.ratios[-1]) > ratio_bound:
            rep.ratio_bounded = False
            rep.failures.append(
                f"mass ratio {float(rep.ratios[-1]):.3g} exceeds bound {ratio_bound}"
            )
        rep.spacer_fraction = 1 - Fraction(1, rep.ratios[-1])

    tail = rep.mixing_ratios[rep.mixing_nonincreasing_from - 1 :]
    if any(b > a for a, b in zip(tail, tail[1:])):
        rep.mixing_trend_ok = False
        rep.warnings.append(
            "staircase mixing ratio i^2/h increases beyond stage "
            f"{rep.mixing_nonincreasing_from}"
        )
    return rep
