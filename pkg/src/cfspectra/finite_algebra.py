"""Exact arithmetic for finite abelian groups, module actions and characters.

Everything here is integer/rational arithmetic: group elements are residue
vectors, characters evaluate to roots of unity stored as exact fractions,
and averages of characters over orbits are kept as integer polynomials in a
primitive root of unity, reduced modulo the corresponding cyclotomic
polynomial.  No floating point enters any equality decision.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm, prod

import numpy as np

from .errors import (
    CharacterTypeError,
    InvalidElementError,
    InvalidSubgroupError,
    SizeCapError,
)

#: Hard default on full enumerations (elements of a group, dual groups, ...).
ENUMERATION_CAP = 10**6

Element = tuple[int, ...]


# ---------------------------------------------------------------------------
# groups and automorphisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Direct sum of cyclic groups Z/n_1 + ... + Z/n_r; elements are residue vectors."""

    orders: tuple[int, ...]

    def __post_init__(self):
        if not self.orders or any(n < 1 for n in self.orders):
            raise ValueError(f"orders must be positive, got {self.orders}")
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))

    @property
    def rank(self) -> int:
        return len(self.orders)

    @property
    def size(self) -> int:
        return prod(self.orders)

    @property
    def exponent(self) -> int:
        return lcm(*self.orders)

    def zero(self) -> Element:
        return (0,) * self.rank

    def contains(self, a) -> bool:
        return (
            isinstance(a, tuple)
            and len(a) == self.rank
            and all(isinstance(x, int) and 0 <= x < n for x, n in zip(a, self.orders))
        )

    def check(self, a) -> Element:
        if not self.contains(a):
            raise InvalidElementError(f"{a!r} is not an element of {self}")
        return a

    def add(self, a: Element, b: Element) -> Element:
        return tuple((x + y) % n for x, y, n in zip(a, b, self.orders))

    def neg(self, a: Element) -> Element:
        return tuple((-x) % n for x, n in zip(a, self.orders))

    def sub(self, a: Element, b: Element) -> Element:
        return tuple((x - y) % n for x, y, n in zip(a, b, self.orders))

    def scale(self, m: int, a: Element) -> Element:
        return tuple((m * x) % n for x, n in zip(a, self.orders))

    def generators(self) -> list[Element]:
        eye = []
        for i in range(self.rank):
            v = [0] * self.rank
            v[i] = 1 % self.orders[i]
            eye.append(tuple(v))
        return eye

    def elements(self, cap: int = ENUMERATION_CAP) -> list[Element]:
        if self.size > cap:
            raise SizeCapError(f"group of size {self.size} exceeds enumeration cap {cap}")
        return list(itertools.product(*[range(n) for n in self.orders]))

    def element_index(self, a: Element) -> int:
        """Mixed-radix index matching the order produced by elements()."""
        idx = 0
        for x, n in zip(a, self.orders):
            idx = idx * n + x
        return idx

    def element_by_index(self, idx: int) -> Element:
        out = []
        for n in reversed(self.orders):
            out.append(idx % n)
            idx //= n
        return tuple(reversed(out))

    def __str__(self):
        return "Z/" + " + Z/".join(str(n) for n in self.orders)


def _det_mod_p(rows: list[list[int]], p: int) -> int:
    """Determinant of a square integer matrix modulo a prime p."""
    n = len(rows)
    a = [[x % p for x in row] for row in rows]
    det = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] % p), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = (det * a[col][col]) % p
        inv = pow(a[col][col], p - 2, p)
        for r in range(col + 1, n):
            f = (a[r][col] * inv) % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[col])]
    return det % p


def _prime_factors(n: int) -> list[int]:
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


@dataclass(frozen=True)
class GroupAutomorphism:
    """Automorphism of a FiniteAbelianGroup given by the images of its generators."""

    group: FiniteAbelianGroup
    images: tuple[Element, ...]

    def __post_init__(self):
        if len(self.images) != self.group.rank:
            raise ValueError("need one image per generator")
        object.__setattr__(self, "images", tuple(tuple(v) for v in self.images))
        for img, n in zip(self.images, self.group.orders):
            self.group.check(img)
            if any(x * n % m for x, m in zip(img, self.group.orders)):
                raise InvalidElementError(
                    f"generator of order {n} mapped to {img}, which has larger order"
                )
        if not self._invertible():
            raise InvalidElementError("generator images do not define a bijection")

    def _invertible(self) -> bool:
        # The induced map on G/pG must be invertible for every prime p | |G|;
        # for finite abelian G that is equivalent to bijectivity.
        orders = self.group.orders
        for p in _prime_factors(self.group.size):
            idx = [i for i, n in enumerate(orders) if n % p == 0]
            rows = [[self.images[j][i] for j in idx] for i in idx]
            if _det_mod_p(rows, p) == 0:
                return False
        return True

    @property
    def matrix(self) -> np.ndarray:
        """Integer matrix M with column j = image of generator j."""
        m = np.zeros((self.group.rank, self.group.rank), dtype=np.int64)
        for j, img in enumerate(self.images):
            m[:, j] = img
        return m

    def apply(self, a: Element) -> Element:
        self.group.check(a)
        acc = self.group.zero()
        for coeff, img in zip(a, self.images):
            if coeff:
                acc = self.group.add(acc, self.group.scale(coeff, img))
        return acc

    def compose(self, other: "GroupAutomorphism") -> "GroupAutomorphism":
        """self after other (i.e. a |-> self(other(a)))."""
        return GroupAutomorphism(self.group, tuple(self.apply(img) for img in other.images))

    def power(self, m: int) -> "GroupAutomorphism":
        if m < 0:
            raise ValueError("negative powers need an explicit order; raise to order-1 instead")
        result = identity_automorphism(self.group)
        base = self
        while m:
            if m & 1:
                result = result.compose(base)
            base = base.compose(base)
            m >>= 1
        return result

    def is_identity(self) -> bool:
        return self.images == tuple(self.group.generators())

    def dual(self) -> "GroupAutomorphism":
        """The adjoint map chi |-> chi o self on the dual group (same orders)."""
        dual_group = FiniteAbelianGroup(self.group.orders)
        images = []
        for t in dual_group.generators():
            chi = Character(self.group, t)
            images.append(tuple(chi.evaluate(img).scaled_exponent(n) for img, n in zip(self.images, self.group.orders)))
        return GroupAutomorphism(dual_group, tuple(images))


def identity_automorphism(group: FiniteAbelianGroup) -> GroupAutomorphism:
    return GroupAutomorphism(group, tuple(group.generators()))


@dataclass(frozen=True)
class ModuleAction:
    """Action of a finite abelian group on a module by automorphisms.

    The acting group is typically cyclic here; each generator is assigned an
    automorphism, and the assignment must respect the generator's order.
    """

    group: FiniteAbelianGroup
    module: FiniteAbelianGroup
    generator_maps: tuple[GroupAutomorphism, ...]
    _powers: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(self.generator_maps) != self.group.rank:
            raise ValueError("need one automorphism per acting generator")
        for phi, n in zip(self.generator_maps, self.group.orders):
            if phi.group != self.module:
                raise InvalidElementError("automorphism acts on the wrong module")
            if not phi.power(n).is_identity():
                raise InvalidElementError(
                    f"assigned automorphism does not have order dividing {n}"
                )

    def automorphism_for(self, k: Element) -> GroupAutomorphism:
        self.group.check(k)
        if k not in self._powers:
            acc = identity_automorphism(self.module)
            for coeff, phi in zip(k, self.generator_maps):
                if coeff:
                    acc = acc.compose(phi.power(coeff))
            self._powers[k] = acc
        return self._powers[k]

    def act(self, k: Element, a: Element) -> Element:
        return self.automorphism_for(k).apply(a)

    def is_trivial(self) -> bool:
        return all(phi.is_identity() for phi in self.generator_maps)


def trivial_action(module: FiniteAbelianGroup) -> ModuleAction:
    k = FiniteAbelianGroup((1,))
    return ModuleAction(k, module, (identity_automorphism(module),))


# ---------------------------------------------------------------------------
# roots of unity and characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootOfUnity:
    """The value e^{2 pi i p/q}, stored as the exponent p/q in lowest terms, 0 <= p/q < 1."""

    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "exponent", Fraction(self.exponent) % 1)

    @classmethod
    def from_pq(cls, p: int, q: int) -> "RootOfUnity":
        return cls(Fraction(p, q))

    @property
    def p(self) -> int:
        return self.exponent.numerator

    @property
    def q(self) -> int:
        return self.exponent.denominator

    @property
    def order(self) -> int:
        return self.q

    def __mul__(self, other: "RootOfUnity") -> "RootOfUnity":
        return RootOfUnity(self.exponent + other.exponent)

    def inverse(self) -> "RootOfUnity":
        return RootOfUnity(-self.exponent)

    def conj(self) -> "RootOfUnity":
        return self.inverse()

    def __pow__(self, m: int) -> "RootOfUnity":
        return RootOfUnity(m * self.exponent)

    def is_one(self) -> bool:
        return self.p == 0

    def value(self) -> complex:
        return cmath.exp(2j * cmath.pi * float(self.exponent))

    def scaled_exponent(self, n: int) -> int:
        """Return t with self = e^{2 pi i t/n}; requires q | n."""
        if n % self.q:
            raise ValueError(f"{self} is not an {n}-th root of unity")
        return self.p * (n // self.q) % n


ONE = RootOfUnity(Fraction(0))


@dataclass(frozen=True)
class Character(object):
    """Character of a FiniteAbelianGroup, given by an exponent vector."""

    group: FiniteAbelianGroup
    exponents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(t) for t in self.exponents))
        if not self.group.contains(self.exponents):
            raise CharacterTypeError(
                f"exponent vector {self.exponents} invalid for {self.group}"
            )

    def evaluate(self, a: Element) -> RootOfUnity:
        self.group.check(a)
        e = sum(
            (Fraction(t * x, n) for t, x, n in zip(self.exponents, a, self.group.orders)),
            Fraction(0),
        )
        return RootOfUnity(e)

    def is_trivial(self) -> bool:
        return all(t == 0 for t in self.exponents)

    def __mul__(self, other: "Character") -> "Character":
        if other.group != self.group:
            raise CharacterTypeError("characters of different groups")
        return Character(self.group, self.group.add(self.exponents, other.exponents))

    def conj(self) -> "Character":
        return Character(self.group, self.group.neg(self.exponents))

    def compose_automorphism(self, phi: GroupAutomorphism) -> "Character":
        """The character a |-> self(phi(a))."""
        if phi.group != self.group:
            raise CharacterTypeError("automorphism of the wrong group")
        exps = tuple(
            self.evaluate(img).scaled_exponent(n)
            for img, n in zip(phi.images, self.group.orders)
        )
        return Character(self.group, exps)

    def compose_action(self, action: ModuleAction, k: Element) -> "Character":
        """The character a |-> self(k . a)."""
        if action.module != self.group:
            raise CharacterTypeError("action on the wrong module")
        return self.compose_automorphism(action.automorphism_for(k))


def dual_characters(group: FiniteAbelianGroup, cap: int = ENUMERATION_CAP) -> list[Character]:
    """All characters of the group; exactly |G| of them, trivial one first."""
    return [Character(group, t) for t in group.elements(cap)]


# ---------------------------------------------------------------------------
# exact cyclotomic sums
# ---------------------------------------------------------------------------


def _divisors(n: int) -> list[int]:
    out = [d for d in range(1, n + 1) if n % d == 0]
    return out


def _polydiv_exact(num: list[int], den: list[int]) -> list[int]:
    """Quotient of exact integer polynomial division (remainder must be zero)."""
    num = list(num)
    q = [0] * (len(num) - len(den) + 1)
    for i in range(len(num) - len(den), -1, -1):
        c = num[i + len(den) - 1]
        assert c % den[-1] == 0
        q[i] = c // den[-1]
        for j, d in enumerate(den):
            num[i + j] -= q[i] * d
    assert all(c == 0 for c in num), "non-exact polynomial division"
    return q


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients (low degree first) of the n-th cyclotomic polynomial."""
    if n == 1:
        return (-1, 1)
    poly = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in _divisors(n):
        if d < n:
            poly = _polydiv_exact(poly, list(cyclotomic_polynomial(d)))
    return tuple(poly)


def _reduce_mod_cyclotomic(coeffs: list[int], n: int) -> list[int]:
    """Remainder of an integer polynomial (deg < n) modulo the n-th cyclotomic polynomial."""
    phi = cyclotomic_polynomial(n)
    deg = len(phi) - 1
    out = list(coeffs) + [0] * (n - len(coeffs))
    for i in range(len(out) - 1, deg - 1, -1):
        c = out[i]
        if c:
            out[i] = 0
            for j in range(deg):
                out[i - deg + j] -= c * phi[j]
    return out[:n]


@dataclass(frozen=True, eq=False)
class CyclotomicSum:
    """An exact value (integer polynomial in a primitive N-th root) / denominator.

    The coefficient vector is kept reduced modulo the N-th cyclotomic
    polynomial, so two sums represent the same complex number iff their
    cross-scaled difference reduces to the zero vector over a common N.
    """

    root_order: int
    coeffs: tuple[int, ...]
    denominator: int

    @classmethod
    def from_roots(cls, roots, denominator: int = 1) -> "CyclotomicSum":
        roots = list(roots)
        n = lcm(*(r.q for r in roots)) if roots else 1
        raw = [0] * n
        for r in roots:
            raw[r.p * (n // r.q)] += 1
        return cls._normalized(n, raw, denominator)

    @classmethod
    def from_fraction(cls, x) -> "CyclotomicSum":
        x = Fraction(x)
        return cls._normalized(1, [x.numerator], x.denominator)

    @classmethod
    def zero(cls) -> "CyclotomicSum":
        return cls._normalized(1, [0], 1)

    @classmethod
    def _normalized(cls, n: int, coeffs: list[int], den: int) -> "CyclotomicSum":
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            den, coeffs = -den, [-c for c in coeffs]
        red = _reduce_mod_cyclotomic(coeffs, n)
        g = gcd(den, *[abs(c) for c in red]) or 1
        return cls(n, tuple(c // g for c in red), den // g)

    def _embedded(self, n: int) -> list[int]:
        assert n % self.root_order == 0
        step = n // self.root_order
        out = [0] * n
        for j, c in enumerate(self.coeffs):
            out[j * step] += c
        return out

    def __add__(self, other: "CyclotomicSum") -> "CyclotomicSum":
        n = lcm(self.root_order, other.root_order)
        a, b = self._embedded(n), other._embedded(n)
        den = lcm(self.denominator, other.denominator)
        sa, sb = den // self.denominator, den // other.denominator
        return CyclotomicSum._normalized(n, [sa * x + sb * y for x, y in zip(a, b)], den)

    def __neg__(self) -> "CyclotomicSum":
        return CyclotomicSum(self.root_order, tuple(-c for c in self.coeffs), self.denominator)

    def __sub__(self, other: "CyclotomicSum") -> "CyclotomicSum":
        return self + (-other)

    def scale(self, x) -> "CyclotomicSum":
        x = Fraction(x)
        return CyclotomicSum._normalized(
            self.root_order,
            [x.numerator * c for c in self.coeffs],
            self.denominator * x.denominator,
        )

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return Fraction(self.coeffs[0], self.denominator)

    def value(self) -> complex:
        n = self.root_order
        return sum(
            c * cmath.exp(2j * cmath.pi * j / n) for j, c in enumerate(self.coeffs) if c
        ) / self.denominator if any(self.coeffs) else 0j

    def equals(self, other: "CyclotomicSum") -> bool:
        return (self - other).is_zero()

    def __eq__(self, other):
        return isinstance(other, CyclotomicSum) and self.equals(other)

    def __repr__(self):
        return f"CyclotomicSum(N={self.root_order}, coeffs={self.coeffs}, den={self.denominator})"


def cyclo_equal(x: CyclotomicSum, y: CyclotomicSum) -> bool:
    """Exact equality of two cyclotomic sums (integer arithmetic only)."""
    return x.equals(y)


# ---------------------------------------------------------------------------
# orbits, orbit averages and trace counts
# ---------------------------------------------------------------------------


def orbit(action: ModuleAction, a: Element, cap: int = ENUMERATION_CAP) -> frozenset:
    """The full orbit {k . a : k in the acting group}."""
    action.module.check(a)
    return frozenset(action.act(k, a) for k in action.group.elements(cap))


def orbit_average(
    action: ModuleAction, chi: Character, a: Element, cap: int = ENUMERATION_CAP
) -> CyclotomicSum:
    """Average of the character over the orbit of a, as an exact cyclotomic sum."""
    if chi.group != action.module:
        raise CharacterTypeError("character of the wrong module")
    orb = sorted(orbit(action, a, cap))
    return CyclotomicSum.from_roots((chi.evaluate(b) for b in orb), len(orb))


def verify_subgroup(group: FiniteAbelianGroup, elems) -> frozenset:
    """Check closure under addition and negation; raises InvalidSubgroupError."""
    s = frozenset(elems)
    if group.zero() not in s:
        raise InvalidSubgroupError("subgroup must contain 0")
    for a in s:
        group.check(a)
        if group.neg(a) not in s:
            raise InvalidSubgroupError(f"not closed under negation at {a}")
        for b in s:
            if group.add(a, b) not in s:
                raise InvalidSubgroupError(f"not closed under addition at {a}+{b}")
    return s


def subgroup_from_generators(
    group: FiniteAbelianGroup, gens, cap: int = ENUMERATION_CAP
) -> frozenset:
    """All sums of multiples of the generators (closure under the group law)."""
    frontier = {group.zero()}
    for g in gens:
        group.check(g)
        new = set()
        for base in frontier:
            x = base
            while True:
                new.add(x)
                x = group.add(x, g)
                if x == base:
                    break
                if len(new) > cap:
                    raise SizeCapError("subgroup closure exceeds cap")
        frontier = new
    return frozenset(frontier)


def orbit_trace_counts(
    action: ModuleAction, subgroup, cap: int = ENUMERATION_CAP, warn=None
) -> set[int]:
    """The set of counts #(orbit(d) intersected with the subgroup), d nonzero in it."""
    d_set = verify_subgroup(action.module, subgroup)
    nonzero = [d for d in d_set if d != action.module.zero()]
    if not nonzero:
        if warn is not None:
            warn("trace counts of the zero subgroup: quantifying over an empty set")
        return set()
    return {len(orbit(action, d, cap) & d_set) for d in nonzero}
