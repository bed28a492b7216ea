#!/usr/bin/env python3
"""From stage labels to cocycles to phased-permutation components.

Each labelled stage contributes a table on its cut set; the cocycle between
two tower levels is an exact element of the semidirect product, and each
character of the algebra turns the tower map into a permutation with
root-of-unity edge phases whose spectrum is computed cycle by cycle.
"""

from fractions import Fraction

from cfspectra import (
    Character,
    SessionConfig,
    build_component,
    canonical_word,
    evaluate_cocycle,
    exact_spectrum,
    synth,
)

session = synth(SessionConfig(
    mode="direct", targets=(1, 2),
    blocks=((Fraction(1, 2), 4, 3, None),),
))
print("stage labels:", [(l.kind, l.k, l.a) for l in session.labels])

# Exact cocycle values between levels of the full tower.
sched = session.schedule
x = canonical_word(5, sched)
y = canonical_word(17, sched)
print("word of level 5:", x)
print("word of level 17:", y)
print("cocycle value (group exponent, module element):",
      evaluate_cocycle(x, y, session.maps, session.ctx))

# Components: base-tower components for acting-group characters, skew-tower
# components for module characters.  The trivial one is a bare cycle.
eta0 = Character(session.triple.k_group, (0,))
spec = exact_spectrum(build_component(session, eta0, depth=3))
print("\ntrivial component: cycles", spec.signature)

eta1 = Character(session.triple.k_group, (1,))
spec = exact_spectrum(build_component(session, eta1, depth=3))
print("twisted component simple spectrum:", spec.is_simple())

d = session.factor_characters()[2]
chi = session.duality.character_of_dual(d)
spec = exact_spectrum(build_component(session, chi, depth=3))
print(f"skew component for d={d}: {spec.total_multiplicity} eigenvalues, "
      f"cycles {spec.signature}")
