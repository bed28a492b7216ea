"""Construction of algebraic triples (K, B, D) with prescribed orbit-trace counts.

Given a target set P = {p_1 < p_2 < ...} the factory builds, per entry, a
prime cyclic block whose nonzero orbits all have length exactly p_i, then
glues the blocks into a module B with a single cyclic automorphism theta so
that the set of counts #(orbit(d) & D), d nonzero in the distinguished
subgroup D, is exactly {p_1, ..., p_m}.  The same data dualizes to the
companion picture used by the Koopman components, and truncating at depths
1..m gives a coherent tower of cyclic quotients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import prod

from .errors import ConsistencyError, ConstructionError, SizeCapError
from .finite_algebra import (
    ENUMERATION_CAP,
    Character,
    FiniteAbelianGroup,
    GroupAutomorphism,
    ModuleAction,
    RootOfUnity,
    orbit_trace_counts,
)

PRIME_SEARCH_BOUND = 10**6


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _prime_factors_of(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _primitive_root(q: int) -> int:
    """Smallest primitive root modulo a prime q."""
    if q == 2:
        return 1
    factors = []
    m = q - 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            factors.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        factors.append(m)
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in factors):
            return g
    raise ConstructionError(f"no primitive root mod {q}")  # unreachable for prime q


@dataclass(frozen=True)
class OrbitBlock:
    """Z/q with multiplication by a unit of multiplicative order p.

    Every nonzero element then has an orbit of length exactly p: a fixed
    nonzero point would force the unit to be 1.
    """

    prime: int
    multiplier: int
    orbit_length: int

    @property
    def group(self) -> FiniteAbelianGroup:
        return FiniteAbelianGroup((self.prime,))

    @property
    def automorphism(self) -> GroupAutomorphism:
        return GroupAutomorphism(self.group, ((self.multiplier % self.prime,),))

    def verify(self):
        phi = self.automorphism
        for x in range(1, self.prime):
            seen, y = set(), (x,)
            while y not in seen:
                seen.add(y)
                y = phi.apply(y)
            if len(seen) != self.orbit_length:
                raise ConsistencyError(
                    f"orbit of {x} mod {self.prime} has length {len(seen)}, "
                    f"wanted {self.orbit_length}"
                )


def orbit_block(p: int, search_bound: int = PRIME_SEARCH_BOUND) -> OrbitBlock:
    """A block whose nonzero orbits all have length exactly p."""
    if p < 1:
        raise ConstructionError(f"orbit length must be >= 1, got {p}")
    if p == 1:
        block = OrbitBlock(2, 1, 1)
        block.verify()
        return block
    q = p + 1
    while q <= search_bound:
        if q % p == 1 and _is_prime(q):
            g = _primitive_root(q)
            mult = pow(g, (q - 1) // p, q)
            block = OrbitBlock(q, mult, p)
            block.verify()
            return block
        q += 1
    raise ConstructionError(f"no prime = 1 mod {p} below {search_bound}")


@dataclass(frozen=True)
class BlockSpan:
    """Where the copies of one block live inside the assembled module."""

    block_index: int  # 0-based position in the target list
    start: int  # first coordinate of the span
    copies: int  # number of copies of the block


@dataclass(frozen=True)
class AlgebraicTriple:
    """(K, B, D): cyclic K = <theta> acting on B, distinguished subgroup D."""

    targets: tuple[int, ...]
    blocks: tuple[OrbitBlock, ...]
    module: FiniteAbelianGroup
    theta: GroupAutomorphism
    spans: tuple[BlockSpan, ...]
    d_coords: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.targets)

    @property
    def k_order(self) -> int:
        return prod(self.targets)

    @property
    def k_group(self) -> FiniteAbelianGroup:
        return FiniteAbelianGroup((self.k_order,))

    @cached_property
    def action(self) -> ModuleAction:
        return ModuleAction(self.k_group, self.module, (self.theta,))

    def d_generators(self) -> list[tuple[int, ...]]:
        gens = []
        for c in self.d_coords:
            v = [0] * self.module.rank
            v[c] = 1 % self.module.orders[c]
            gens.append(tuple(v))
        return gens

    def d_size(self) -> int:
        return prod(self.module.orders[c] for c in self.d_coords)

    def d_elements(self, cap: int = ENUMERATION_CAP) -> list[tuple[int, ...]]:
        if self.d_size() > cap:
            raise SizeCapError(f"|D| = {self.d_size()} exceeds cap {cap}")
        out = [self.module.zero()]
        for c in self.d_coords:
            unit = [0] * self.module.rank
            unit[c] = 1 % self.module.orders[c]
            unit = tuple(unit)
            new = []
            for base in out:
                x = base
                for _ in range(self.module.orders[c]):
                    new.append(x)
                    x = self.module.add(x, unit)
            out = new
        return out


def _block_step_automorphism(
    module: FiniteAbelianGroup, spans, blocks
) -> GroupAutomorphism:
    """One application of theta: per block span, cycle the copies and twist copy 0.

    The copy shift is chosen so that iterating (copies) times applies the
    block twist simultaneously to every copy.
    """
    images = []
    for span, block in zip(spans, blocks):
        q, u, c = block.prime, block.multiplier, span.copies
        for copy in range(c):
            target_copy = (copy - 1) % c
            val = u % q if target_copy == 0 else 1
            v = [0] * module.rank
            v[span.start + target_copy] = val
            images.append(tuple(v))
    return GroupAutomorphism(module, tuple(images))


def assemble_triple(
    targets, depth: int | None = None, cap: int = ENUMERATION_CAP
) -> AlgebraicTriple:
    """Build the triple for the first `depth` entries of the target set.

    The module is B_1 + B_2^{copies p_1} + B_3^{copies p_1 p_2} + ...; theta
    twists copy 0 of each span and cyclically permutes the copies; D is
    supported on coordinate 0 of every span.  The defining property
    trace-counts(K, B, D) == set(targets) is re-verified on construction and
    a failure raises, never returns.
    """
    targets = tuple(sorted(set(int(p) for p in targets)))
    if not targets:
        raise ConstructionError("empty target set")
    if depth is None:
        depth = len(targets)
    if not 1 <= depth <= len(targets):
        raise ConstructionError(f"depth {depth} out of range for {targets}")
    targets = targets[:depth]

    blocks = tuple(orbit_block(p) for p in targets)
    spans, orders, d_coords = [], [], []
    copies = 1
    for i, block in enumerate(blocks):
        spans.append(BlockSpan(i, len(orders), copies))
        d_coords.append(len(orders))
        orders.extend([block.prime] * copies)
        copies *= block.orbit_length
    module = FiniteAbelianGroup(tuple(orders))
    # |B| may exceed the enumeration cap (it is never enumerated); the
    # verification below only walks D and K, which must stay enumerable
    if prod(targets) > cap or prod(b.prime for b in blocks) > cap:
        raise SizeCapError(f"K or D at depth {depth} exceeds enumeration cap {cap}")
    theta = _block_step_automorphism(module, spans, blocks)

    triple = AlgebraicTriple(
        targets=targets,
        blocks=blocks,
        module=module,
        theta=theta,
        spans=tuple(spans),
        d_coords=tuple(d_coords),
    )
    _verify_triple(triple, cap)
    return triple


def _verify_triple(triple: AlgebraicTriple, cap: int):
    # the twist-and-cycle identity on each span: iterating (copies) times
    # must act as the block twist on every copy simultaneously
    for span, block in zip(triple.spans, triple.blocks):
        power = triple.theta.power(span.copies)
        for copy in range(span.copies):
            coord = span.start + copy
            img = power.images[coord]
            expected = [0] * triple.module.rank
            expected[coord] = block.multiplier % block.prime
            if img != tuple(expected):
                raise ConsistencyError(
                    f"copy-cycling identity fails on span {span} at copy {copy}"
                )
    # theta must have exactly the advertised order
    if not triple.theta.power(triple.k_order).is_identity():
        raise ConsistencyError("theta^|K| is not the identity")
    for p in _prime_factors_of(triple.k_order):
        if triple.theta.power(triple.k_order // p).is_identity():
            raise ConsistencyError(f"theta has order dividing |K|/{p}")
    # the defining trace-count property, by exhaustive orbit enumeration
    got = orbit_trace_counts(triple.action, triple.d_elements(cap), cap)
    if got != set(triple.targets):
        raise ConsistencyError(
            f"trace counts {sorted(got)} != targets {list(triple.targets)}"
        )


# ---------------------------------------------------------------------------
# compactification tower
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompactTower:
    """Coherent truncations of a triple at depths 1..m.

    Level j carries the cyclic group K_j = Z/(p_1...p_j) acting on the module
    assembled from the first j blocks; the connecting maps are reduction mod
    |K_j| on the acting groups and coordinate truncation on the modules.
    """

    levels: tuple[AlgebraicTriple, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def k_orders(self) -> list[int]:
        return [lvl.k_order for lvl in self.levels]

    def project_k(self, j: int, k: int) -> int:
        """K_depth -> K_j, reduction of the cyclic generator exponent."""
        return k % self.levels[j - 1].k_order

    def project_module(self, j: int, a):
        """Module at full depth -> module at depth j (drop deep-block coordinates)."""
        rank = self.levels[j - 1].module.rank
        return tuple(a[:rank])

    def deepest(self) -> AlgebraicTriple:
        return self.levels[-1]

    def dense_submodule_elements(self, cap: int = ENUMERATION_CAP):
        """Every element of the deepest module (all orbits are finite here)."""
        return self.deepest().module.elements(cap)

    def verify(self, cap: int = ENUMERATION_CAP):
        for j in range(1, self.depth):
            lo, hi = self.levels[j - 1], self.levels[j]
            if hi.k_order % lo.k_order:
                raise ConsistencyError(
                    f"K_{j + 1} -> K_{j} is not onto: {hi.k_order} vs {lo.k_order}"
                )
            if hi.module.orders[: lo.module.rank] != lo.module.orders:
                raise ConsistencyError(f"module truncation mismatch at level {j}")
            # equivariance on generators: project(theta_hi(e)) == theta_lo(project(e))
            for gen in hi.module.generators():
                lhs = self.project_module(j, hi.theta.apply(gen))
                g_lo = self.project_module(j, gen)
                rhs = lo.theta.apply(g_lo)
                if lhs != rhs:
                    raise ConsistencyError(f"equivariance fails at level {j} on {gen}")
            # the deep action on shallow coordinates factors through K_j
            power = hi.theta.power(lo.k_order)
            for gen in lo.module.generators():
                deep_gen = gen + (0,) * (hi.module.rank - lo.module.rank)
                if self.project_module(j, power.apply(deep_gen)) != gen:
                    raise ConsistencyError(
                        f"kernel of K_{j + 1} -> K_{j} acts nontrivially at level {j}"
                    )


def compactify(triple: AlgebraicTriple, cap: int = ENUMERATION_CAP) -> CompactTower:
    """Truncations of the triple at every depth 1..m, with coherence verified."""
    levels = tuple(
        assemble_triple(triple.targets, depth=j, cap=cap)
        for j in range(1, triple.depth + 1)
    )
    tower = CompactTower(levels)
    tower.verify(cap)
    return tower


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualityRecord:
    """Identification of the dual-side data attached to a triple.

    The companion module A is the character group of B (realized on the same
    orders via the standard pairing); K acts on A by k . t = t o theta^{-k}.
    The annihilator H of D inside A consists of the characters vanishing on
    every distinguished coordinate, and the characters of A that matter for
    the factor components correspond exactly to the elements of D.
    """

    triple: AlgebraicTriple
    dual_module: FiniteAbelianGroup
    dual_action: ModuleAction
    annihilator_coords: tuple[int, ...]
    annihilator_size: int

    def pairing(self, t, b) -> RootOfUnity:
        """<t, b> = product over coordinates of e^{2 pi i t_i b_i / n_i}."""
        return Character(self.triple.module, b).evaluate(t)

    def character_of_dual(self, d) -> Character:
        """The character of A indexed by d in B (evaluation at d)."""
        self.triple.module.check(d)
        return Character(self.dual_module, d)

    def factor_character_index(self) -> list[tuple[int, ...]]:
        """Elements of D = the characters of A that are trivial on H."""
        return self.triple.d_elements()

    def annihilator_elements(self, cap: int = ENUMERATION_CAP):
        if self.annihilator_size > cap:
            raise SizeCapError(f"|H| = {self.annihilator_size} exceeds cap {cap}")
        free = [
            (i, self.dual_module.orders[i])
            for i in self.annihilator_coords
        ]
        out = [self.dual_module.zero()]
        for i, n in free:
            unit = [0] * self.dual_module.rank
            unit[i] = 1 % n
            unit = tuple(unit)
            new = []
            for base in out:
                x = base
                for _ in range(n):
                    new.append(x)
                    x = self.dual_module.add(x, unit)
            out = new
        return out

    def verify(self, cap: int = ENUMERATION_CAP):
        b_size = self.triple.module.size
        d_size = self.triple.d_size()
        if self.annihilator_size * d_size != b_size:
            raise ConsistencyError(
                f"|H| * |D| = {self.annihilator_size} * {d_size} != |B| = {b_size}"
            )
        if self.annihilator_size <= cap:
            for t in self.annihilator_elements(cap):
                for d in self.triple.d_generators():
                    if not self.pairing(t, d).is_one():
                        raise ConsistencyError(f"{t} is not in the annihilator of D")
        # the identification sends the factor characters onto D, so the
        # trace-count set computed there must coincide with the primal one
        primal = orbit_trace_counts(self.triple.action, self.triple.d_elements(cap), cap)
        if primal != set(self.triple.targets):
            raise ConsistencyError("primal trace counts changed under dualization")


def dualize(triple: AlgebraicTriple, cap: int = ENUMERATION_CAP) -> DualityRecord:
    """Character-group picture of a triple, with |H| * |D| = |B| certified."""
    dual_module = FiniteAbelianGroup(triple.module.orders)
    theta_inv = triple.theta.power(triple.k_order - 1)
    dual_gen = theta_inv.dual()
    dual_action = ModuleAction(triple.k_group, dual_module, (dual_gen,))
    ann_coords = tuple(
        i for i in range(triple.module.rank) if i not in set(triple.d_coords)
    )
    ann_size = prod(triple.module.orders[i] for i in ann_coords) if ann_coords else 1
    record = DualityRecord(
        triple=triple,
        dual_module=dual_module,
        dual_action=dual_action,
        annihilator_coords=ann_coords,
        annihilator_size=ann_size,
    )
    record.verify(cap)
    return record
