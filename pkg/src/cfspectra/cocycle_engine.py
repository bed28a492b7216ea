"""Stage labels, per-stage cocycle maps, coordinate words and exact evaluation.

The cocycle into the semidirect product K x| A is assembled from per-stage
tables on the cut sets.  A point of the height-h_m tower is identified by a
coordinate word (residual height at the least depth where the level exists,
then one cut per deeper stage); the cocycle value between two levels is the
product of the per-stage table entries along one word times the inverse of
the product along the other.  Every table maps cut 0 to the identity, so
zero-padding words is harmless and the evaluation is well defined.

TowerModel holds the same data as flat numpy arrays for bulk work: per-level
word products, per-edge transition values and closed-form powers of the
successor map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cf_builder import (
    KIND_DELAYED_STAIRCASE,
    KIND_RIGID_STAIRCASE,
    KIND_STAIRCASE,
    CFSchedule,
    CFStage,
)
from .errors import LabelError, PairError, SizeCapError
from .finite_algebra import ENUMERATION_CAP, FiniteAbelianGroup, ModuleAction

LABEL_RIGID_TRANSLATE = "rigid_translate"  # stage pushes the module part by -a
LABEL_RIGID_ROTATE = "rigid_rotate"  # stage pushes the acting-group part by -k
LABEL_DELAYED_TRANSLATE = "delayed_translate"  # module push arrives one column late
LABEL_PLAIN = "plain"

MODE_DIRECT = "direct"  # translate/rotate classes only; realizes sets containing 1
MODE_PRODUCT = "product"  # adds delayed-translate classes; realizes sets containing 2

_KIND_FOR_LABEL = {
    LABEL_RIGID_TRANSLATE: (KIND_RIGID_STAIRCASE, KIND_DELAYED_STAIRCASE),
    LABEL_RIGID_ROTATE: (KIND_RIGID_STAIRCASE, KIND_DELAYED_STAIRCASE),
    LABEL_DELAYED_TRANSLATE: (KIND_DELAYED_STAIRCASE,),
    LABEL_PLAIN: (KIND_RIGID_STAIRCASE, KIND_DELAYED_STAIRCASE, KIND_STAIRCASE),
}


@dataclass(frozen=True)
class StageLabel:
    """Which recurrence class a stage belongs to, with its target payload."""

    kind: str
    k: int | None = None  # acting-group target (rotate labels)
    a: tuple[int, ...] | None = None  # module target (translate labels)

    def __post_init__(self):
        if self.kind not in _KIND_FOR_LABEL:
            raise LabelError(f"unknown label kind {self.kind!r}")
        if self.kind == LABEL_RIGID_ROTATE and self.k is None:
            raise LabelError("rotate label needs a group target")
        if self.kind in (LABEL_RIGID_TRANSLATE, LABEL_DELAYED_TRANSLATE) and self.a is None:
            raise LabelError("translate label needs a module target")

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "a": list(self.a) if self.a else None}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("k"), tuple(d["a"]) if d.get("a") else None)


def label_cycle(module: FiniteAbelianGroup, k_order: int, mode: str,
                cap: int = ENUMERATION_CAP):
    """Deterministic target cycle: one translate, (one delayed,) one rotate per turn.

    Module targets and group targets advance independently through their full
    finite-level enumerations, so every target recurs with bounded gaps.
    """
    if mode not in (MODE_DIRECT, MODE_PRODUCT):
        raise LabelError(f"unknown mode {mode!r}")
    a_targets = module.elements(cap)
    k_targets = list(range(k_order))
    if not a_targets or not k_targets:
        raise LabelError("empty target enumeration")
    kinds = [LABEL_RIGID_TRANSLATE]
    if mode == MODE_PRODUCT:
        kinds.append(LABEL_DELAYED_TRANSLATE)
    kinds.append(LABEL_RIGID_ROTATE)

    def generator():
        counters = {LABEL_RIGID_TRANSLATE: 0, LABEL_DELAYED_TRANSLATE: 0,
                    LABEL_RIGID_ROTATE: 0}
        while True:
            for kind in kinds:
                i = counters[kind]
                counters[kind] += 1
                if kind == LABEL_RIGID_ROTATE:
                    yield StageLabel(kind, k=k_targets[i % len(k_targets)])
                else:
                    yield StageLabel(kind, a=a_targets[i % len(a_targets)])

    return generator()


def schedule_labels(schedule: CFSchedule, module: FiniteAbelianGroup, k_order: int,
                    mode: str, cap: int = ENUMERATION_CAP) -> tuple[StageLabel, ...]:
    """Assign the round-robin labels to a schedule, checking shape compatibility."""
    if all(st.kind == KIND_STAIRCASE for st in schedule.stages):
        return tuple(StageLabel(LABEL_PLAIN) for _ in schedule.stages)
    gen = label_cycle(module, k_order, mode, cap)
    labels = []
    for st in schedule.stages:
        label = next(gen)
        if st.kind not in _KIND_FOR_LABEL[label.kind]:
            raise LabelError(
                f"stage {st.index} has shape {st.kind!r}, incompatible with "
                f"label {label.kind!r}"
            )
        labels.append(label)
    return tuple(labels)


def plain_labels(schedule: CFSchedule) -> tuple[StageLabel, ...]:
    return tuple(StageLabel(LABEL_PLAIN) for _ in schedule.stages)


# ---------------------------------------------------------------------------
# per-stage maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleStageMaps:
    """Tables on one cut set: group part and module part, indexed like the cuts."""

    stage_index: int
    cuts: tuple[int, ...]
    beta: tuple[int, ...]  # exponents in the cyclic acting group
    alpha: tuple[tuple[int, ...], ...]  # module elements

    def __post_init__(self):
        if self.beta[0] != 0 or any(self.alpha[0]):
            raise LabelError("tables must map cut 0 to the identity")
        if not (len(self.beta) == len(self.alpha) == len(self.cuts)):
            raise LabelError("table length mismatch")

    def to_dict(self):
        return {
            "stage_index": self.stage_index,
            "cuts": list(self.cuts),
            "beta": list(self.beta),
            "alpha": [list(a) for a in self.alpha],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["stage_index"], tuple(d["cuts"]), tuple(d["beta"]),
                   tuple(tuple(a) for a in d["alpha"]))


def stage_maps(label: StageLabel, stage: CFStage, k_order: int,
               module: FiniteAbelianGroup) -> CocycleStageMaps:
    """Build the cocycle tables a stage label prescribes on the stage's cuts.

    Translate labels step the module part by -a through the rigid run (the
    delayed variant waits out the rigid run and steps through the offset
    run); rotate labels do the same to the group part.  Beyond the stepping
    range the tables are constant.
    """
    if stage.kind not in _KIND_FOR_LABEL[label.kind]:
        raise LabelError(
            f"label {label.kind!r} incompatible with stage shape {stage.kind!r}"
        )
    r, i = stage.r_count, stage.i_count
    zero = module.zero()
    beta = [0] * r
    alpha = [zero] * r
    if label.kind == LABEL_RIGID_TRANSLATE:
        module.check(label.a)
        for j in range(1, r):
            step = label.a if j <= i - 1 else zero
            alpha[j] = module.sub(alpha[j - 1], step)
    elif label.kind == LABEL_RIGID_ROTATE:
        for j in range(1, r):
            step = label.k if j <= i - 1 else 0
            beta[j] = (beta[j - 1] - step) % k_order
    elif label.kind == LABEL_DELAYED_TRANSLATE:
        module.check(label.a)
        for j in range(1, r):
            step = label.a if i <= j <= 2 * i - 1 else zero
            alpha[j] = module.sub(alpha[j - 1], step)
    return CocycleStageMaps(stage.index, stage.cuts, tuple(beta), tuple(alpha))


# ---------------------------------------------------------------------------
# coordinate words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoordinateWord:
    """Canonical coordinates of a tower level at a given depth.

    ``least_depth`` is the smallest stage index at which the level exists
    (0 for levels of the base tower, n for spacers introduced by stage n);
    ``residual`` is the height inside that stage's tower and ``cuts`` lists
    the chosen cut of every deeper stage.
    """

    depth: int
    least_depth: int
    residual: int
    cuts: tuple[int, ...]  # cuts for stages least_depth+1 .. depth

    def padded_cuts(self) -> tuple[int, ...]:
        """Length-`depth` cut vector with zeros below the least depth."""
        return (0,) * self.least_depth + self.cuts

    def is_spacer(self) -> bool:
        return self.least_depth > 0


def canonical_word(level: int, schedule: CFSchedule, depth: int | None = None) -> CoordinateWord:
    """Greedy decomposition of a level into per-stage cuts plus a residual."""
    if depth is None:
        depth = schedule.depth
    heights = schedule.heights()
    if not 0 <= level < heights[depth]:
        raise PairError(f"level {level} outside tower of height {heights[depth]}")
    cuts = []
    rest = level
    for n in range(depth, 0, -1):
        st = schedule.stages[n - 1]
        # the unique column of stage n containing the residual, if any
        lo = 0
        candidate = None
        for c in st.cuts:  # cuts are short; scan is fine
            if c <= rest < c + st.base_height:
                candidate = c
                break
            if c > rest:
                break
        if candidate is None:
            return CoordinateWord(depth, n, rest, tuple(reversed(cuts)))
        cuts.append(candidate)
        rest -= candidate
    return CoordinateWord(depth, 0, rest, tuple(reversed(cuts)))


def word_level(word: CoordinateWord, schedule: CFSchedule) -> int:
    return word.residual + sum(word.cuts)


# ---------------------------------------------------------------------------
# exact cocycle evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemidirectContext:
    """Arithmetic in the semidirect product (Z/k_order) x| module."""

    k_order: int
    module: FiniteAbelianGroup
    action: ModuleAction  # of Z/k_order on the module

    def identity(self):
        return (0, self.module.zero())

    def act(self, k: int, a):
        return self.action.act((k % self.k_order,), a)

    def mul(self, g1, g2):
        k1, a1 = g1
        k2, a2 = g2
        return ((k1 + k2) % self.k_order, self.module.add(a1, self.act(k1, a2)))

    def inv(self, g):
        k, a = g
        return ((-k) % self.k_order, self.module.neg(self.act(-k, a)))


def word_product(word: CoordinateWord, maps_by_stage, ctx: SemidirectContext):
    """Left-to-right product of the per-stage table entries along a word."""
    g = ctx.identity()
    for stage_maps_, c in zip(maps_by_stage, word.padded_cuts()):
        idx = stage_maps_.cuts.index(c)
        g = ctx.mul(g, (stage_maps_.beta[idx], stage_maps_.alpha[idx]))
    return g


def evaluate_cocycle(x: CoordinateWord, y: CoordinateWord, maps_by_stage,
                     ctx: SemidirectContext):
    """Exact cocycle value between two levels of a common-depth tower.

    Computed as product(x) * product(y)^{-1}; the per-stage tables send cut 0
    to the identity, so the zero padding of canonical words contributes
    nothing and the cocycle identity holds exactly.
    """
    if x.depth != y.depth:
        raise PairError(f"words at depths {x.depth} and {y.depth}")
    gx = word_product(x, maps_by_stage, ctx)
    gy = word_product(y, maps_by_stage, ctx)
    return ctx.mul(gx, ctx.inv(gy))


def transition_values(schedule: CFSchedule, maps_by_stage, ctx: SemidirectContext,
                      depth: int | None = None, cap: int = ENUMERATION_CAP):
    """Cocycle value on every edge level -> level+1 (cyclically) of the tower."""
    if depth is None:
        depth = schedule.depth
    h = schedule.height(depth)
    if h > cap:
        raise SizeCapError(f"tower height {h} exceeds cap {cap}")
    words = [canonical_word(l, schedule, depth) for l in range(h)]
    out = []
    for l in range(h):
        out.append(evaluate_cocycle(words[l], words[(l + 1) % h], maps_by_stage, ctx))
    return out


# ---------------------------------------------------------------------------
# bulk model
# ---------------------------------------------------------------------------


class TowerModel:
    """Flat-array view of a tower at some depth, with optional cocycle data.

    Levels are 0..h-1; the map is +1 cyclically.  When cocycle tables are
    attached, ``word_beta``/``word_alpha`` hold the per-level word products
    (group exponent and module vector), from which transition values and any
    power of the skew map follow in closed form.
    """

    def __init__(self, schedule: CFSchedule, depth: int | None = None,
                 maps_by_stage=None, ctx: SemidirectContext | None = None,
                 cap: int = ENUMERATION_CAP):
        self.schedule = schedule
        self.depth = schedule.depth if depth is None else depth
        self.height = schedule.height(self.depth)
        if self.height > cap:
            raise SizeCapError(f"tower height {self.height} exceeds cap {cap}")
        self.ctx = ctx
        self.maps_by_stage = maps_by_stage
        if maps_by_stage is not None:
            if ctx is None:
                raise ValueError("cocycle tables need a semidirect context")
            self._build_word_products()

    # -- pure tower structure ------------------------------------------------

    def cylinder_ids(self, n0: int = 1) -> np.ndarray:
        """Per-level id of the depth-n0 cylinder containing it; -1 for deeper spacers."""
        key = ("cyl", n0)
        cache = self.__dict__.setdefault("_misc_cache", {})
        if key not in cache:
            ids = np.arange(self.schedule.height(n0), dtype=np.int64)
            h = self.schedule.height(n0)
            for st in self.schedule.stages[n0:self.depth]:
                nxt = np.full(st.new_height, -1, dtype=np.int64)
                for c in st.cuts:
                    nxt[c:c + h] = ids
                ids, h = nxt, st.new_height
            cache[key] = ids
        return cache[key]

    def cylinder_mask(self, n0: int, f: int) -> np.ndarray:
        return self.cylinder_ids(n0) == f

    # -- cocycle arrays -------------------------------------------------------

    def _powered_images(self, vec: np.ndarray) -> list[np.ndarray]:
        """theta^t(vec) for t = 0..k_order-1 (vec a module element array)."""
        out = [np.array(vec, dtype=np.int64)]
        act = self.ctx.action
        for t in range(1, self.ctx.k_order):
            out.append(np.array(act.act((1,), tuple(int(x) for x in out[-1])), dtype=np.int64))
        return out

    def _build_word_products(self):
        ctx = self.ctx
        orders = np.array(ctx.module.orders, dtype=np.int64)
        rank = len(orders)
        kappa = ctx.k_order
        h0 = self.schedule.initial_height
        beta = np.zeros(h0, dtype=np.int64)
        alpha = np.zeros((h0, rank), dtype=np.int64)
        for st, tables in zip(self.schedule.stages[: self.depth], self.maps_by_stage):
            h_prev = st.base_height
            nb = np.zeros(st.new_height, dtype=np.int64)
            na = np.zeros((st.new_height, rank), dtype=np.int64)
            for idx, c in enumerate(st.cuts):
                b_c = tables.beta[idx]
                a_c = tables.alpha[idx]
                seg = slice(c, c + h_prev)
                nb[seg] = (beta + b_c) % kappa
                if any(a_c):
                    # (b, w) * (b_c, a_c) has module part w + theta^b(a_c)
                    powered = np.stack(self._powered_images(np.array(a_c)))
                    na[seg] = (alpha + powered[beta % kappa]) % orders
                else:
                    na[seg] = alpha
            beta, alpha = nb, na
        self.word_beta = beta
        self.word_alpha = alpha
        self._orders = orders
        self._theta_mats = self._action_matrices()

    def _action_matrices(self) -> np.ndarray:
        """Stack of matrices for theta^t, t = 0..k_order-1 (rows reduced mod orders)."""
        mats = [np.eye(len(self._orders), dtype=np.int64)]
        gen = self.ctx.action.generator_maps[0].matrix
        for _ in range(1, self.ctx.k_order):
            mats.append((gen @ mats[-1]) % self._orders[:, None])
        return np.stack(mats)

    def _apply_theta_pow(self, exps: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        """theta^{exps[l]}(vecs[l]) per level, grouped by exponent."""
        out = np.empty_like(vecs)
        for t in np.unique(exps):
            mask = exps == t
            out[mask] = vecs[mask] @ self._theta_mats[t].T
        return out % self._orders

    def step_values(self, steps: int):
        """Transition (group exponent, module vector) per level for +steps.

        Value at level l is product(word l) * product(word l+steps)^{-1},
        computed from the cached word products.
        """
        kappa = self.ctx.k_order
        nxt = np.roll(self.word_beta, -steps)
        nxt_alpha = np.roll(self.word_alpha, -steps, axis=0)
        d_beta = (self.word_beta - nxt) % kappa
        d_alpha = (self.word_alpha - self._apply_theta_pow(d_beta, nxt_alpha)) % self._orders
        return d_beta, d_alpha

    def transitions(self):
        return self.step_values(1)

    def cocycle_between(self, l1: int, l2: int):
        """Exact cocycle value between two levels, from the cached products."""
        kappa = self.ctx.k_order
        db = int((self.word_beta[l1] - self.word_beta[l2]) % kappa)
        w2 = tuple(int(x) for x in self.word_alpha[l2])
        da = self.ctx.module.sub(
            tuple(int(x) for x in self.word_alpha[l1]), self.ctx.act(db, w2)
        )
        return db, da
