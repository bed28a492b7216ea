"""Finite-level Koopman analysis: phased permutations, exact spectra, probes.

Components of the composition operator over a tower are phased permutations:
a successor map on finitely many states with a root-of-unity weight on every
edge.  Their spectra are exactly computable cycle by cycle, power averages
are evaluated by exact bucket counting of phase exponents, and the
multiplicity bookkeeping reduces to orbit combinatorics on the distinguished
subgroup.  Floating point appears only in least-squares residuals and in
report summaries; every equality decision is integer/rational.
"""

from __future__ import annotations

import cmath
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .cocycle_engine import (
    LABEL_DELAYED_TRANSLATE,
    LABEL_PLAIN,
    LABEL_RIGID_ROTATE,
    LABEL_RIGID_TRANSLATE,
    MODE_PRODUCT,
    StageLabel,
    TowerModel,
)
from .errors import (
    CharacterTypeError,
    ConsistencyError,
    LabelError,
    LagRangeError,
    SizeCapError,
)
from .finite_algebra import (
    ENUMERATION_CAP,
    Character,
    CyclotomicSum,
    RootOfUnity,
    cyclo_equal,
    orbit,
    orbit_average,
    orbit_trace_counts,
)

DEFAULT_STATE_CAP = 2 * 10**6
PROBE_TOLERANCE_FACTOR = 3  # deviation budget is this over the stage's column count


# ---------------------------------------------------------------------------
# phased permutation operators
# ---------------------------------------------------------------------------


@dataclass
class PhasedCycleOperator:
    """Permutation of states with a root-of-unity phase on every edge.

    Acts on functions by (U v)(s) = zeta_N^{phase_exp[s]} * v(succ[s]).
    """

    succ: np.ndarray
    phase_exp: np.ndarray
    phase_order: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.succ = np.asarray(self.succ, dtype=np.int64)
        self.phase_exp = np.asarray(self.phase_exp, dtype=np.int64) % self.phase_order
        if self.succ.shape != self.phase_exp.shape:
            raise ValueError("one phase exponent per state required")

    @property
    def n_states(self) -> int:
        return int(self.succ.size)

    def _phases(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.phase_exp / self.phase_order)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self._phases() * np.asarray(vec)[self.succ]

    def apply_inverse(self, vec: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_states, dtype=complex)
        out[self.succ] = np.conj(self._phases()) * np.asarray(vec)
        return out

    def cycles(self):
        """(representative, length, total phase exponent) per cycle, vectorized."""
        n = self.n_states
        rep = np.arange(n, dtype=np.int64)
        jump = self.succ.copy()
        hops = 1
        while hops < n:
            rep = np.minimum(rep, rep[jump])
            jump = jump[jump]
            hops *= 2
        reps, inverse = np.unique(rep, return_inverse=True)
        lengths = np.bincount(inverse)
        totals = np.bincount(inverse, weights=self.phase_exp.astype(np.float64))
        totals = totals.astype(np.int64) % self.phase_order
        return reps, lengths, totals


@dataclass(frozen=True)
class SpectralSet:
    """Exact eigenvalue multiset of a phased permutation.

    Stored as the cycle signature {(length, total-phase exponent): count};
    a cycle of length L with total phase e^{2 pi i t} contributes the L
    solutions of z^L = e^{2 pi i t}.
    """

    signature: tuple  # sorted ((length, Fraction total), count) pairs

    @classmethod
    def from_operator(cls, op: PhasedCycleOperator) -> "SpectralSet":
        _, lengths, totals = op.cycles()
        c = Counter(
            (int(L), Fraction(int(t), op.phase_order) % 1)
            for L, t in zip(lengths, totals)
        )
        return cls(tuple(sorted(c.items())))

    @property
    def total_multiplicity(self) -> int:
        return sum(int(L) * mult for (L, _), mult in self.signature)

    def eigen_counter(self, cap: int = ENUMERATION_CAP) -> Counter:
        """Multiset of eigenvalue exponents in [0, 1) as Fractions."""
        cached = self.__dict__.get("_eigen_cache")
        if cached is not None:
            return cached
        if self.total_multiplicity > cap:
            raise SizeCapError("eigenvalue multiset too large to expand")
        out: Counter = Counter()
        for (L, t), mult in self.signature:
            for j in range(L):
                out[(t + j) / L] += mult
        self.__dict__["_eigen_cache"] = out
        return out

    def eigenvalues(self, cap: int = ENUMERATION_CAP) -> list[RootOfUnity]:
        return [RootOfUnity(e) for e, m in sorted(self.eigen_counter(cap).items()) for _ in range(m)]

    def is_simple(self, cap: int = ENUMERATION_CAP) -> bool:
        return all(m == 1 for m in self.eigen_counter(cap).values())

    def equals(self, other: "SpectralSet", cap: int = ENUMERATION_CAP) -> bool:
        if self.signature == other.signature:
            return True
        return self.eigen_counter(cap) == other.eigen_counter(cap)

    def overlap_fraction(self, other: "SpectralSet", cap: int = ENUMERATION_CAP) -> float:
        a, b = self.eigen_counter(cap), other.eigen_counter(cap)
        shared = sum(min(a[e], b[e]) for e in a.keys() & b.keys())
        return shared / max(self.total_multiplicity, other.total_multiplicity)

    def to_dict(self) -> dict:
        return {
            "cycles": [
                {"length": L, "phase_num": t.numerator, "phase_den": t.denominator,
                 "count": mult}
                for (L, t), mult in self.signature
            ],
            "total_multiplicity": self.total_multiplicity,
        }


def exact_spectrum(op: PhasedCycleOperator) -> SpectralSet:
    """Exact eigenvalues with multiplicity; integer arithmetic per cycle."""
    return SpectralSet.from_operator(op)


# ---------------------------------------------------------------------------
# building components from a tower model
# ---------------------------------------------------------------------------


def _root_order(session) -> int:
    return lcm(session.k_order, session.duality.dual_module.exponent)


def _pairing_weights(orders, d, n: int) -> np.ndarray:
    return np.array([di * (n // ni) for di, ni in zip(d, orders)], dtype=np.int64)


def build_eta_component(
    model: TowerModel, eta_exp: int, phase_order: int, cap: int = DEFAULT_STATE_CAP
) -> PhasedCycleOperator:
    """Component over the base tower twisted by a character of the acting group."""
    h = model.height
    if h > cap:
        raise SizeCapError(f"{h} states exceed cap {cap}")
    kappa = model.ctx.k_order
    if phase_order % kappa:
        raise CharacterTypeError("phase order must be divisible by the group order")
    d_beta, _ = model.transitions()
    succ = (np.arange(h, dtype=np.int64) + 1) % h
    exps = (eta_exp * d_beta * (phase_order // kappa)) % phase_order
    return PhasedCycleOperator(succ, exps, phase_order,
                               {"kind": "eta", "eta": eta_exp % kappa, "levels": h})


def build_chi_component(
    model: TowerModel, d, phase_order: int, cap: int = DEFAULT_STATE_CAP
) -> PhasedCycleOperator:
    """Component over the skew tower (levels x acting group) twisted by a
    character of the module, indexed by an element d of the primal side."""
    ctx = model.ctx
    kappa = ctx.k_order
    h = model.height
    if h * kappa > cap:
        raise SizeCapError(f"{h * kappa} states exceed cap {cap}")
    orders = ctx.module.orders
    if any(phase_order % n for n in orders) or phase_order % kappa:
        raise CharacterTypeError("phase order incompatible with the algebra")
    d = tuple(int(x) for x in d)
    if len(d) != len(orders):
        raise CharacterTypeError("component index has the wrong rank")
    d_beta, d_alpha = model.transitions()
    weights = _pairing_weights(orders, d, phase_order)

    # state (level l, group exponent k) flattened as l * kappa + k
    levels = np.arange(h, dtype=np.int64)
    succ = np.empty(h * kappa, dtype=np.int64)
    exps = np.empty(h * kappa, dtype=np.int64)
    for k in range(kappa):
        twisted = model._apply_theta_pow(np.full(h, k, dtype=np.int64), d_alpha)
        exps[levels * kappa + k] = (twisted @ weights) % phase_order
        succ[levels * kappa + k] = ((levels + 1) % h) * kappa + (k + d_beta) % kappa
    return PhasedCycleOperator(succ, exps, phase_order,
                               {"kind": "chi", "d": d, "levels": h, "kappa": kappa})


def build_component(session, character: Character, depth: int | None = None) -> PhasedCycleOperator:
    """Dispatch on the character's home group (acting group vs module)."""
    model = session.model(depth)
    n = _root_order(session)
    if character.group == session.triple.k_group:
        return build_eta_component(model, character.exponents[0], n, session.config.state_cap)
    if character.group == session.duality.dual_module:
        return build_chi_component(model, character.exponents, n, session.config.state_cap)
    raise CharacterTypeError("character belongs to neither side of the session algebra")


def permutation_operator(model: TowerModel, phase_order: int,
                         cap: int = DEFAULT_STATE_CAP) -> PhasedCycleOperator:
    """The plain (phase-free) permutation of the skew tower levels x group."""
    kappa = model.ctx.k_order
    h = model.height
    if h * kappa > cap:
        raise SizeCapError(f"{h * kappa} states exceed cap {cap}")
    d_beta, _ = model.transitions()
    levels = np.arange(h, dtype=np.int64)
    succ = np.empty(h * kappa, dtype=np.int64)
    for k in range(kappa):
        succ[levels * kappa + k] = ((levels + 1) % h) * kappa + (k + d_beta) % kappa
    return PhasedCycleOperator(succ, np.zeros(h * kappa, dtype=np.int64), phase_order,
                               {"kind": "permutation"})


# ---------------------------------------------------------------------------
# class equivalence (finite shadow of the conjugation symmetry)
# ---------------------------------------------------------------------------


def class_equivalence_check(session, d, depth: int | None = None) -> dict[int, bool]:
    """Spectrum of the d-component vs the (d composed with k)-component, per k."""
    duality = session.duality
    chi = duality.character_of_dual(tuple(d))
    base = exact_spectrum(build_component(session, chi, depth))
    verdicts = {}
    for k in range(session.k_order):
        twisted = chi.compose_action(duality.dual_action, (k,))
        spec = exact_spectrum(build_component(session, twisted, depth))
        verdicts[k] = base.equals(spec)
    return verdicts


# ---------------------------------------------------------------------------
# weak limit probes
# ---------------------------------------------------------------------------


@dataclass
class WeakLimitReport:
    stage_index: int
    label: StageLabel
    component: dict
    family: dict
    prediction_kind: str
    rows: list = field(default_factory=list)
    max_deviation: float = 0.0
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "stage_index": self.stage_index,
            "label": self.label.to_dict(),
            "component": self.component,
            "family": self.family,
            "prediction_kind": self.prediction_kind,
            "rows": self.rows,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _eta_pair_tables(model: TowerModel, steps: int, n0: int):
    """Exact bucket counts for <U^steps 1_f, 1_g> on the base tower.

    Returns (counts[g, f, s], cylinder count, level count) where s is the
    group exponent accumulated over the path; everything is integer.
    """
    h = model.height
    cyl = model.cylinder_ids(n0)
    f_of = np.roll(cyl, -steps)  # cylinder of level + steps
    d_beta, _ = model.step_values(steps)
    kappa = model.ctx.k_order
    n_cyl = model.schedule.height(n0)
    valid = (cyl >= 0) & (f_of >= 0)
    key = (cyl[valid] * n_cyl + f_of[valid]) * kappa + d_beta[valid]
    counts = np.bincount(key, minlength=n_cyl * n_cyl * kappa)
    return counts.reshape(n_cyl, n_cyl, kappa), n_cyl, h


def _eta_values(model: TowerModel, steps: int, n0: int, eta_exp: int):
    """Complex table V[g, f] = <U_eta^steps 1_f, 1_g> plus its exact buckets."""
    counts, n_cyl, h = _eta_pair_tables(model, steps, n0)
    kappa = model.ctx.k_order
    phases = np.exp(2j * np.pi * eta_exp * np.arange(kappa) / kappa)
    return counts @ phases / h, counts, n_cyl


def _chi_values(model: TowerModel, steps: int, n0: int, d, phase_order: int):
    """Tables V[e_u, e_v, g, f] = <U_chi^steps (1_f x eta_{e_u}), 1_g x eta_{e_v}>.

    The group-state sum is folded into a precomputed table over (character
    difference, module value), so the level pass is a single bucket count.
    """
    ctx = model.ctx
    kappa = ctx.k_order
    orders = np.array(ctx.module.orders, dtype=np.int64)
    h = model.height
    cyl = model.cylinder_ids(n0)
    f_of = np.roll(cyl, -steps)
    d_beta, d_alpha = model.step_values(steps)
    n_cyl = model.schedule.height(n0)

    # module values indexed in mixed radix
    radix = np.ones(len(orders), dtype=np.int64)
    for i in range(len(orders) - 2, -1, -1):
        radix[i] = radix[i + 1] * orders[i + 1]
    n_a = int(np.prod(orders))
    w_idx = d_alpha @ radix

    valid = (cyl >= 0) & (f_of >= 0)
    key = ((cyl[valid] * n_cyl + f_of[valid]) * kappa + d_beta[valid]) * n_a + w_idx[valid]
    counts = np.bincount(key, minlength=n_cyl * n_cyl * kappa * n_a)
    counts = counts.reshape(n_cyl, n_cyl, kappa, n_a)

    # G[e, w] = sum over k of chi_d(theta^k w) * e^{2 pi i e k / kappa}
    weights = _pairing_weights(orders, d, phase_order)
    a_elements = np.zeros((n_a, len(orders)), dtype=np.int64)
    rem = np.arange(n_a, dtype=np.int64)
    for i in range(len(orders)):
        a_elements[:, i] = rem // radix[i]
        rem = rem % radix[i]
    g_table = np.zeros((kappa, n_a), dtype=complex)
    for k in range(kappa):
        twisted = model._apply_theta_pow(np.full(n_a, k, dtype=np.int64), a_elements)
        pair_exp = (twisted @ weights) % phase_order
        chi_vals = np.exp(2j * np.pi * pair_exp / phase_order)
        for e in range(kappa):
            g_table[e] += chi_vals * cmath.exp(2j * cmath.pi * e * k / kappa)

    eta_phase = np.exp(2j * np.pi * np.arange(kappa)[:, None] * np.arange(kappa)[None, :] / kappa)
    # value[e_u, e_v, g, f] = (1/(h kappa)) sum_{s,w} counts[g,f,s,w]
    #                          * eta_{e_u}(s) * G[e_u - e_v, w]
    out = np.zeros((kappa, kappa, n_cyl, n_cyl), dtype=complex)
    for e_u in range(kappa):
        for e_v in range(kappa):
            g_vec = g_table[(e_u - e_v) % kappa]
            contracted = np.einsum("gfsw,s,w->gf", counts, eta_phase[e_u], g_vec)
            out[e_u, e_v] = contracted / (h * kappa)
    return out, counts, n_cyl


def _cylinder_measures(model: TowerModel, n0: int) -> np.ndarray:
    cyl = model.cylinder_ids(n0)
    n_cyl = model.schedule.height(n0)
    counts = np.bincount(cyl[cyl >= 0], minlength=n_cyl)
    return counts / model.height


def weak_limit_probe(session, stage_index: int, component, n0: int | None = None) -> WeakLimitReport:
    """Exact power-average table at one stage against its class prediction.

    ``component`` is ("eta", exponent) for a base-tower component or
    ("chi", d) for a skew-tower component; the stage's label decides which
    limit formula is predicted.  The tolerance is 3 over the stage's column
    count; exceeding it is reported, and the right response is a larger
    stage, never a looser gate.
    """
    n0 = session.config.cylinder_level if n0 is None else n0
    stage = session.stage(stage_index)
    label = session.label(stage_index)
    if label.kind == LABEL_PLAIN:
        raise LabelError("plain stages carry no weak-limit prediction")
    model = session.model(stage_index)
    h_n = stage.base_height
    delta = float(stage.delta) if stage.delta is not None else stage.i_count / stage.r_count
    tol = PROBE_TOLERANCE_FACTOR / stage.r_count
    mu = _cylinder_measures(model, n0)
    kind, payload = component

    if kind == "eta":
        return _probe_eta(session, model, stage, label, int(payload), n0, h_n, delta, tol, mu)
    if kind == "chi":
        return _probe_chi(session, model, stage, label, tuple(payload), n0, h_n, delta, tol, mu)
    raise CharacterTypeError(f"unknown component kind {kind!r}")


def _probe_eta(session, model, stage, label, eta_exp, n0, h_n, delta, tol, mu):
    kappa = model.ctx.k_order
    values, counts, n_cyl = _eta_values(model, h_n, n0, eta_exp)
    trivial = eta_exp % kappa == 0

    if label.kind == LABEL_RIGID_TRANSLATE:
        pred_kind = "partial_rigidity"  # delta I + (1 - delta) P
        one_step = None
    elif label.kind == LABEL_RIGID_ROTATE:
        pred_kind = "rotation"  # delta eta(k) I + (1 - delta) P
        one_step = None
    elif label.kind == LABEL_DELAYED_TRANSLATE:
        pred_kind = "delayed"  # delta (I + U*) + (1 - 2 delta) P
        one_step, _, _ = _eta_values(model, 1, n0, eta_exp)
    else:
        raise LabelError(f"no base-tower prediction for label {label.kind!r}")

    rot = 1.0 + 0j
    if label.kind == LABEL_RIGID_ROTATE:
        rot = cmath.exp(2j * cmath.pi * eta_exp * label.k / kappa)

    rows = []
    max_dev = 0.0
    for g in range(n_cyl):
        for f in range(n_cyl):
            inner = mu[f] if f == g else 0.0
            val = values[g, f]
            if label.kind == LABEL_DELAYED_TRANSLATE:
                # <u, U v> = conj(<U 1_g, 1_f>)
                pred = delta * (inner + np.conj(one_step[f, g]))
                pred += (1 - 2 * delta) * (mu[f] * mu[g] if trivial else 0.0)
            else:
                pred = delta * rot * inner
                pred += (1 - delta) * (mu[f] * mu[g] if trivial else 0.0)
            dev = float(abs(val - pred))
            max_dev = max(max_dev, dev)
            rows.append({
                "u": f, "v": g, "eta": eta_exp,
                "value": [float(val.real), float(val.imag)],
                "pred": [complex(pred).real, complex(pred).imag],
                "deviation": dev,
            })
    return WeakLimitReport(
        stage_index=stage.index, label=label,
        component={"kind": "eta", "eta": eta_exp},
        family={"cylinder_level": n0, "cylinders": n_cyl},
        prediction_kind=pred_kind, rows=rows,
        max_deviation=max_dev, tolerance=tol,
    )


def _probe_chi(session, model, stage, label, d, n0, h_n, delta, tol, mu):
    ctx = model.ctx
    kappa = ctx.k_order
    n = _root_order(session)
    trivial_d = all(x == 0 for x in d)

    if label.kind not in (LABEL_RIGID_TRANSLATE, LABEL_DELAYED_TRANSLATE):
        raise LabelError(
            f"no skew-tower prediction for label {label.kind!r}; "
            "rotate stages are probed on the base tower"
        )

    values, counts, n_cyl = _chi_values(model, h_n, n0, d, n)
    one_step = None
    if label.kind == LABEL_DELAYED_TRANSLATE:
        one_step, _, _ = _chi_values(model, 1, n0, d, n)

    l_value = 1.0 + 0j
    if not trivial_d:
        chi = session.duality.character_of_dual(d)
        l_exact = orbit_average(session.duality.dual_action, chi, label.a)
        l_value = l_exact.value()
    else:
        l_exact = CyclotomicSum.from_fraction(1)

    if label.kind == LABEL_RIGID_TRANSLATE:
        pred_kind = "orbit_average" if not trivial_d else "partial_rigidity"
    else:
        pred_kind = "delayed_orbit_average" if not trivial_d else "delayed"

    rows = []
    max_dev = 0.0
    for e_u in range(kappa):
        for e_v in range(kappa):
            for g in range(n_cyl):
                for f in range(n_cyl):
                    inner = mu[f] if (f == g and e_u == e_v) else 0.0
                    mean_uv = mu[f] * mu[g] if (e_u == 0 and e_v == 0) else 0.0
                    val = values[e_u, e_v, g, f]
                    if trivial_d:
                        if label.kind == LABEL_RIGID_TRANSLATE:
                            pred = delta * inner + (1 - delta) * mean_uv
                        else:
                            pred = delta * (inner + np.conj(one_step[e_v, e_u, f, g]))
                            pred += (1 - 2 * delta) * mean_uv
                    else:
                        if label.kind == LABEL_RIGID_TRANSLATE:
                            pred = delta * l_value * inner
                        else:
                            pred = delta * (inner + l_value * np.conj(one_step[e_v, e_u, f, g]))
                    dev = float(abs(val - complex(pred)))
                    max_dev = max(max_dev, dev)
                    rows.append({
                        "u": [f, e_u], "v": [g, e_v],
                        "value": [float(val.real), float(val.imag)],
                        "pred": [complex(pred).real, complex(pred).imag],
                        "deviation": dev,
                    })
    return WeakLimitReport(
        stage_index=stage.index, label=label,
        component={"kind": "chi", "d": list(d)},
        family={"cylinder_level": n0, "cylinders": n_cyl, "group_characters": kappa},
        prediction_kind=pred_kind, rows=rows,
        max_deviation=max_dev, tolerance=tol,
    )


# ---------------------------------------------------------------------------
# correlation decay
# ---------------------------------------------------------------------------


@dataclass
class DecayRow:
    lag: int
    pair: tuple[int, int]
    value: Fraction

    def to_csv_row(self) -> str:
        return f"{self.lag},{self.pair[0]}-{self.pair[1]},{self.value.numerator},{self.value.denominator}"


def correlation_decay(model: TowerModel, pairs, lags, n0: int = 1) -> list[DecayRow]:
    """Exact |mu(T^lag A & B) - mu(A) mu(B)| per cylinder pair and lag."""
    h = model.height
    cyl = model.cylinder_ids(n0)
    masks = {}
    for f, g in pairs:
        masks.setdefault(f, cyl == f)
        masks.setdefault(g, cyl == g)
    sizes = {f: int(m.sum()) for f, m in masks.items()}
    rows = []
    for lag in lags:
        lag = int(lag)
        if not 0 <= lag < h:
            raise LagRangeError(f"lag {lag} outside the height-{h} model")
        for f, g in pairs:
            rolled = np.roll(masks[f], lag)  # level of T^lag A
            count = int(np.count_nonzero(masks[g] & rolled))
            value = abs(Fraction(count, h) - Fraction(sizes[f] * sizes[g], h * h))
            rows.append(DecayRow(lag, (f, g), value))
    return rows


def decay_csv(rows) -> str:
    lines = ["lag,pairId,value_numerator,value_denominator"]
    lines += [r.to_csv_row() for r in rows]
    return "\n".join(lines) + "\n"


def sample_lags(lo: int, hi: int, count: int = 24) -> list[int]:
    """Deterministic evenly spaced lag sample in [lo, hi]."""
    if hi < lo:
        raise LagRangeError(f"empty lag window [{lo}, {hi}]")
    if hi - lo + 1 <= count:
        return list(range(lo, hi + 1))
    return sorted({lo + (hi - lo) * j // (count - 1) for j in range(count)})


# ---------------------------------------------------------------------------
# disjointness certificates and the multiplicity report
# ---------------------------------------------------------------------------


@dataclass
class Certificate:
    """Either a conjugation witness or an exact separating orbit average."""

    equivalent: bool
    witness_k: int | None = None
    separating_a: tuple | None = None
    l_left: CyclotomicSum | None = None
    l_right: CyclotomicSum | None = None

    def to_dict(self) -> dict:
        out = {"equivalent": self.equivalent, "witness_k": self.witness_k}
        if self.separating_a is not None:
            out["separating_a"] = list(self.separating_a)
            out["l_left"] = [list(self.l_left.coeffs), self.l_left.denominator,
                             self.l_left.root_order]
            out["l_right"] = [list(self.l_right.coeffs), self.l_right.denominator,
                              self.l_right.root_order]
        return out


def disjointness_certificate(duality, chi: Character, chi2: Character,
                             cap: int = ENUMERATION_CAP) -> Certificate:
    """Conjugation witness if the characters are related, else a separating a.

    The search for a separating element is exhaustive over the module; by
    the finite-level orbit-average identity it must succeed for unrelated
    characters, so a failed search raises instead of returning quietly.
    """
    action = duality.dual_action
    if chi.group != action.module or chi2.group != action.module:
        raise CharacterTypeError("certificates live on the dual module")
    for k in range(duality.triple.k_order):
        if chi.compose_action(action, (k,)).exponents == chi2.exponents:
            return Certificate(equivalent=True, witness_k=k)
    for a in action.module.elements(cap):
        l1 = orbit_average(action, chi, a, cap)
        l2 = orbit_average(action, chi2, a, cap)
        if not cyclo_equal(l1, l2):
            return Certificate(False, None, a, l1, l2)
    raise ConsistencyError(
        "unrelated characters with identical orbit averages on the whole "
        "module; the finite-level separation identity is violated"
    )


@dataclass
class MultiplicityReport:
    targets: tuple[int, ...]
    mode: str
    trace_counts: set[int]
    classes: list  # lists of module elements (exponent vectors)
    class_sizes: list[int]
    multiplicities: set[int]
    equivalence_verdicts: dict
    overlap_fractions: dict
    certificates: dict
    notes: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return set(self.class_sizes) == self.trace_counts

    def to_dict(self) -> dict:
        return {
            "targets": list(self.targets),
            "mode": self.mode,
            "trace_counts": sorted(self.trace_counts),
            "classes": [[list(d) for d in cls] for cls in self.classes],
            "class_sizes": self.class_sizes,
            "multiplicities": sorted(self.multiplicities),
            "equivalence_verdicts": {str(k): v for k, v in self.equivalence_verdicts.items()},
            "overlap_fractions": {str(k): v for k, v in self.overlap_fractions.items()},
            "certificates": {str(k): c.to_dict() for k, c in self.certificates.items()},
            "notes": self.notes,
            "consistent": self.consistent,
        }


def factor_classes(session):
    """Partition of the nonzero factor characters by the conjugation relation.

    Characters indexed by D decompose into traces of acting-group orbits;
    the class of d is orbit(d) & D.
    """
    triple = session.triple
    d_set = set(triple.d_elements())
    zero = triple.module.zero()
    classes = []
    seen = set()
    for d in sorted(d_set):
        if d == zero or d in seen:
            continue
        cls = sorted(orbit(triple.action, d) & d_set)
        seen.update(cls)
        classes.append(cls)
    return classes


def multiplicity_report(session, mode: str | None = None,
                        spectra_depth: int | None = None) -> MultiplicityReport:
    """Class decomposition, size set, equivalence evidence and certificates.

    The class-size set must equal the trace-count set exactly (both are
    orbit counts; an inequality is a construction bug and raises).  In
    product mode the square factor adjoins 2 to the reported multiplicities.
    """
    mode = session.mode if mode is None else mode
    triple = session.triple
    counts = orbit_trace_counts(triple.action, triple.d_elements())
    classes = factor_classes(session)
    class_sizes = [len(c) for c in classes]
    if set(class_sizes) != counts:
        raise ConsistencyError(
            f"class sizes {sorted(set(class_sizes))} != trace counts {sorted(counts)}"
        )
    mult = set(class_sizes)
    notes = []
    if mode == MODE_PRODUCT:
        mult = mult | {2}
        notes.append(
            "product mode: the square factor contributes homogeneous "
            "multiplicity 2; represented algebraically, not spectrally"
        )

    # finite-level equivalence shadow: spectra within a class coincide
    verdicts, overlaps, certs = {}, {}, {}
    reps = [cls[0] for cls in classes]
    spectra = {}
    for i, rep in enumerate(reps):
        verdicts[i] = class_equivalence_check(session, rep, spectra_depth)
        chi = session.duality.character_of_dual(rep)
        spectra[i] = exact_spectrum(build_component(session, chi, spectra_depth))
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            chi_i = session.duality.character_of_dual(reps[i])
            chi_j = session.duality.character_of_dual(reps[j])
            certs[(i, j)] = disjointness_certificate(session.duality, chi_i, chi_j)
            overlaps[(i, j)] = spectra[i].overlap_fraction(spectra[j])
    if any(o == 1.0 for o in overlaps.values()):
        notes.append(
            "cross-class spectral overlap is expected at finite level (all "
            "eigenvalues are roots of unity); disjointness evidence is the "
            "separating orbit averages, never the overlap fraction"
        )
    return MultiplicityReport(
        targets=session.config.targets,
        mode=mode,
        trace_counts=counts,
        classes=classes,
        class_sizes=class_sizes,
        multiplicities=mult,
        equivalence_verdicts=verdicts,
        overlap_fractions=overlaps,
        certificates=certs,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# joint cyclicity probe
# ---------------------------------------------------------------------------


@dataclass
class SimplicityReport:
    residuals: list[float]
    conditioning_flags: list[bool]
    power_window: int

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    @property
    def min_residual(self) -> float:
        return min(self.residuals)


def _power_matrix(op: PhasedCycleOperator, vec: np.ndarray, window: int) -> np.ndarray:
    cols = [np.asarray(vec, dtype=complex)]
    cur = cols[0]
    for _ in range(window):
        cur = op.apply(cur)
        cols.append(cur)
    cur = cols[0]
    for _ in range(window):
        cur = op.apply_inverse(cur)
        cols.insert(0, cur)
    return np.stack(cols, axis=1)


def simplicity_probe(op1: PhasedCycleOperator, op2: PhasedCycleOperator | None,
                     v: np.ndarray, power_window: int,
                     test_vectors: np.ndarray | None = None) -> SimplicityReport:
    """Least-squares residuals of test vectors against the power span of v.

    The span is {(op1^q (+) op2^q) v : |q| <= window} on the direct sum of
    the two state spaces (just op1's powers when op2 is None).  Low
    residuals witness joint cyclicity; a vector far from the span stays far
    because the span cannot grow beyond the available distinct eigenvalues.
    """
    v = np.asarray(v, dtype=complex)
    if op2 is None:
        if v.size != op1.n_states:
            raise ValueError("test vector has the wrong dimension")
        m = _power_matrix(op1, v, power_window)
    else:
        s1 = op1.n_states
        if v.size != s1 + op2.n_states:
            raise ValueError("test vector must live on the direct sum")
        m1 = _power_matrix(op1, v[:s1], power_window)
        m2 = _power_matrix(op2, v[s1:], power_window)
        m = np.concatenate([m1, m2], axis=0)
    dim = m.shape[0]
    if test_vectors is None:
        test_vectors = np.eye(dim, dtype=complex)
    test_vectors = np.atleast_2d(np.asarray(test_vectors, dtype=complex))
    try:
        # rank-revealing basis of the span; plain QR would over-project
        # when the power columns are dependent
        u_svd, s_svd, _ = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return SimplicityReport([1.0] * test_vectors.shape[0],
                                [True] * test_vectors.shape[0], power_window)
    top = s_svd[0] if s_svd.size else 0.0
    keep = s_svd > max(dim, m.shape[1]) * np.finfo(float).eps * top
    basis = u_svd[:, keep]
    rank_deficient = bool(keep.sum() < m.shape[1])
    residuals, flags = [], []
    for w in test_vectors:
        norm = np.linalg.norm(w)
        if norm == 0:
            residuals.append(0.0)
            flags.append(False)
            continue
        proj = basis @ (basis.conj().T @ w)
        residuals.append(float(np.linalg.norm(w - proj) / norm))
        flags.append(rank_deficient)
    return SimplicityReport(residuals, flags, power_window)
