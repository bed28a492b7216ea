"""Session assembly: config -> algebra + schedule + cocycle, and bundle I/O.

A session bundles everything one run needs: the algebraic triple with its
dual-side record, the tower schedule with stage labels, and the per-stage
cocycle tables.  Bundles serialize to a directory of canonical JSON files;
identical configs produce byte-identical bundles (sorted keys, no
timestamps, no floats in the payload).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .cf_builder import (
    KIND_DELAYED_STAIRCASE,
    KIND_RIGID_STAIRCASE,
    CFSchedule,
    DeltaBlock,
    ValidationReport,
    build_schedule,
    concat_delta_blocks,
    validate,
)
from .cocycle_engine import (
    LABEL_DELAYED_TRANSLATE,
    MODE_DIRECT,
    MODE_PRODUCT,
    CocycleStageMaps,
    SemidirectContext,
    StageLabel,
    TowerModel,
    label_cycle,
    plain_labels,
    stage_maps,
)
from .errors import ScheduleError
from .finite_algebra import ENUMERATION_CAP
from .module_factory import AlgebraicTriple, CompactTower, DualityRecord, assemble_triple, compactify, dualize

SCHEMA_VERSION = 1

SHAPE_DELTA_BLOCKS = "delta_blocks"
SHAPE_STAIRCASE = "staircase"
SHAPE_ARITHMETIC = "arithmetic"

BUNDLE_FILES = ("config.json", "algebra.json", "schedule.json", "cocycle.json")


def _frac(x) -> Fraction:
    if isinstance(x, (list, tuple)):
        return Fraction(x[0], x[1])
    return Fraction(x)


@dataclass(frozen=True)
class SessionConfig:
    """Everything a deterministic run is derived from."""

    mode: str
    targets: tuple[int, ...]
    shape: str = SHAPE_DELTA_BLOCKS
    blocks: tuple = ()  # (delta, size, r_start|None[, r_seq]) for delta_blocks
    r_seq: tuple[int, ...] = ()  # per-stage column counts for staircase/arithmetic
    algebra_depth: int | None = None
    initial_height: int = 1
    cylinder_level: int = 1
    state_cap: int = 2 * 10**6
    ratio_bound: float = 100.0
    spectra_depth: int | None = None  # tower depth for spectrum comparisons

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(sorted(set(int(t) for t in self.targets))))
        normalized = []
        for blk in self.blocks:
            d, s, r = blk[0], blk[1], blk[2]
            rs = tuple(int(x) for x in blk[3]) if len(blk) > 3 and blk[3] else None
            normalized.append((Fraction(_frac(d)), int(s), r if r is None else int(r), rs))
        object.__setattr__(self, "blocks", tuple(normalized))
        object.__setattr__(self, "r_seq", tuple(int(r) for r in self.r_seq))
        if self.mode not in (MODE_DIRECT, MODE_PRODUCT):
            raise ScheduleError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_DIRECT and 1 not in self.targets:
            raise ScheduleError(
                "direct mode realizes the class-size set itself, so the target "
                "set must contain 1; use product mode for sets containing 2"
            )
        if self.mode == MODE_PRODUCT and 2 not in self.targets:
            raise ScheduleError(
                "product mode adjoins 2 via the square factor, so the target "
                "set must contain 2"
            )
        if self.shape not in (SHAPE_DELTA_BLOCKS, SHAPE_STAIRCASE, SHAPE_ARITHMETIC):
            raise ScheduleError(f"unknown shape {self.shape!r}")
        if self.shape == SHAPE_DELTA_BLOCKS and not self.blocks:
            raise ScheduleError("delta_blocks shape needs at least one block")
        if self.shape in (SHAPE_STAIRCASE, SHAPE_ARITHMETIC) and not self.r_seq:
            raise ScheduleError(f"{self.shape} shape needs an explicit r_seq")
        if self.shape == SHAPE_ARITHMETIC and self.mode != MODE_DIRECT:
            raise ScheduleError("arithmetic shape has no delayed stages; use direct mode")

    @property
    def num_stages(self) -> int:
        if self.shape == SHAPE_DELTA_BLOCKS:
            return sum(s for _, s, _, _ in self.blocks)
        return len(self.r_seq)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "targets": list(self.targets),
            "shape": self.shape,
            "blocks": [
                {"delta": [d.numerator, d.denominator], "stages": s, "r_start": r,
                 "r_seq": list(rs) if rs else None}
                for d, s, r, rs in self.blocks
            ],
            "r_seq": list(self.r_seq),
            "algebra_depth": self.algebra_depth,
            "initial_height": self.initial_height,
            "cylinder_level": self.cylinder_level,
            "state_cap": self.state_cap,
            "ratio_bound": self.ratio_bound,
            "spectra_depth": self.spectra_depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(
            mode=d["mode"],
            targets=tuple(d["targets"]),
            shape=d.get("shape", SHAPE_DELTA_BLOCKS),
            blocks=tuple(
                (_frac(b["delta"]), b["stages"], b.get("r_start"), b.get("r_seq"))
                for b in d.get("blocks", [])
            ),
            r_seq=tuple(d.get("r_seq", [])),
            algebra_depth=d.get("algebra_depth"),
            initial_height=d.get("initial_height", 1),
            cylinder_level=d.get("cylinder_level", 1),
            state_cap=d.get("state_cap", 2 * 10**6),
            ratio_bound=d.get("ratio_bound", 100.0),
            spectra_depth=d.get("spectra_depth"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SessionConfig":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


@dataclass
class Session:
    config: SessionConfig
    triple: AlgebraicTriple
    tower: CompactTower
    duality: DualityRecord
    ctx: SemidirectContext
    schedule: CFSchedule
    labels: tuple[StageLabel, ...]
    maps: tuple[CocycleStageMaps, ...]
    validation: ValidationReport
    _models: dict = field(default_factory=dict, repr=False)

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def k_order(self) -> int:
        return self.triple.k_order

    @property
    def root_order(self) -> int:
        """Common root-of-unity order for all component phases."""
        from math import lcm

        return lcm(self.k_order, self.duality.dual_module.exponent)

    def stage(self, n: int):
        return self.schedule.stages[n - 1]

    def label(self, n: int) -> StageLabel:
        return self.labels[n - 1]

    def model(self, depth: int | None = None) -> TowerModel:
        depth = self.schedule.depth if depth is None else depth
        if depth not in self._models:
            self._models[depth] = TowerModel(
                self.schedule,
                depth=depth,
                maps_by_stage=self.maps[:depth],
                ctx=self.ctx,
                cap=self.config.state_cap,
            )
        return self._models[depth]

    def factor_characters(self):
        """Exponent vectors (elements of D) indexing the factor components."""
        return self.duality.factor_character_index()


def _delta_block_plan(config: SessionConfig, gen):
    """Stage labels first, cut shapes to match, one block at a time."""
    labels = []
    blocks = []
    for pos, (delta, size, r_start, r_seq) in enumerate(config.blocks, start=1):
        kinds = []
        for _ in range(size):
            label = next(gen)
            labels.append(label)
            kinds.append(
                KIND_DELAYED_STAIRCASE
                if label.kind == LABEL_DELAYED_TRANSLATE
                else KIND_RIGID_STAIRCASE
            )
        blocks.append(DeltaBlock(delta, size, kinds=tuple(kinds), r_start=r_start,
                                 r_seq=r_seq))
    return tuple(labels), concat_delta_blocks(blocks, config.initial_height)


def synth(config: SessionConfig, cap: int = ENUMERATION_CAP) -> Session:
    """Deterministic pipeline: algebra, schedule, labels, cocycle tables."""
    depth_alg = config.algebra_depth or len(config.targets)
    triple = assemble_triple(config.targets, depth_alg, cap)
    tower = compactify(triple, cap)
    duality = dualize(triple, cap)
    ctx = SemidirectContext(triple.k_order, duality.dual_module, duality.dual_action)

    if config.shape == SHAPE_DELTA_BLOCKS:
        gen = label_cycle(duality.dual_module, triple.k_order, config.mode, cap)
        labels, schedule = _delta_block_plan(config, gen)
    elif config.shape == SHAPE_ARITHMETIC:
        specs = [{"kind": KIND_RIGID_STAIRCASE, "i": r, "r": r} for r in config.r_seq]
        schedule = build_schedule(config.initial_height, specs)
        gen = label_cycle(duality.dual_module, triple.k_order, config.mode, cap)
        labels = tuple(next(gen) for _ in schedule.stages)
    else:
        specs = [{"kind": "staircase", "r": r} for r in config.r_seq]
        schedule = build_schedule(config.initial_height, specs)
        labels = plain_labels(schedule)

    maps = tuple(
        stage_maps(label, st, triple.k_order, duality.dual_module)
        for label, st in zip(labels, schedule.stages)
    )
    report = validate(schedule, config.ratio_bound)
    return Session(
        config=config,
        triple=triple,
        tower=tower,
        duality=duality,
        ctx=ctx,
        schedule=schedule,
        labels=labels,
        maps=maps,
        validation=report,
    )


# ---------------------------------------------------------------------------
# bundle persistence
# ---------------------------------------------------------------------------


def _algebra_doc(session: Session) -> dict:
    t = session.triple
    doc = {
        "schema_version": SCHEMA_VERSION,
        "targets": list(t.targets),
        "depth": t.depth,
        "orders": list(t.module.orders),
        "theta_images": [list(v) for v in t.theta.images],
        "d_coords": list(t.d_coords),
        "d_generators": [list(v) for v in t.d_generators()],
        "d_size": t.d_size(),
        "k_order": t.k_order,
        "tower_k_orders": session.tower.k_orders(),
        "annihilator_size": session.duality.annihilator_size,
        "annihilator_coords": list(session.duality.annihilator_coords),
    }
    if t.d_size() <= 4096:
        doc["d_elements"] = sorted(list(v) for v in t.d_elements())
    return doc


def _cocycle_doc(session: Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "labels": [l.to_dict() for l in session.labels],
        "stage_maps": [m.to_dict() for m in session.maps],
    }


def save_bundle(session: Session, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "config.json": session.config.to_json(),
        "algebra.json": canonical_json(_algebra_doc(session)),
        "schedule.json": session.schedule.to_json() + "\n",
        "cocycle.json": canonical_json(_cocycle_doc(session)),
    }
    for name, text in payload.items():
        (outdir / name).write_text(text)
    (outdir / "validation.json").write_text(
        canonical_json(session.validation.to_dict())
    )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "bundle_hash": bundle_hash(outdir),
        "files": sorted(payload),
    }
    (outdir / "manifest.json").write_text(canonical_json(manifest))
    return outdir


def bundle_hash(bundle_dir) -> str:
    h = hashlib.sha256()
    for name in BUNDLE_FILES:
        h.update(name.encode())
        h.update((Path(bundle_dir) / name).read_bytes())
    return h.hexdigest()


def load_bundle(bundle_dir) -> Session:
    """Rebuild the session from its config; stored files are for cross-checks."""
    bundle_dir = Path(bundle_dir)
    config = SessionConfig.from_json((bundle_dir / "config.json").read_text())
    return synth(config)


def stored_documents(bundle_dir) -> dict:
    out = {}
    for name in BUNDLE_FILES + ("validation.json", "manifest.json"):
        path = Path(bundle_dir) / name
        if path.exists():
            out[name] = json.loads(path.read_text())
    return out
