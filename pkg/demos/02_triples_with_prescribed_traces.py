#!/usr/bin/env python3
"""Building (K, B, D) triples whose orbit-trace counts hit a prescribed set.

For each target length p the factory picks a prime block Z/q with a
multiplier of multiplicative order p, then stacks blocks with copy-cycling
so the distinguished subgroup D sees exactly the prescribed counts.
"""

from cfspectra import assemble_triple, compactify, dualize, orbit_block, orbit_trace_counts

for p in (1, 2, 3, 5):
    blk = orbit_block(p)
    print(f"block for length {p}: Z/{blk.prime}, multiply by {blk.multiplier}")

print()
for targets in ({2}, {1, 2}, {2, 3}, {1, 3, 5}):
    triple = assemble_triple(targets)
    counts = orbit_trace_counts(triple.action, triple.d_elements())
    print(f"targets {sorted(targets)}: B = {triple.module}, |K| = {triple.k_order}, "
          f"traces = {sorted(counts)}")

# The construction scales without enumerating B: for {2, 4, 6} the module has
# ~4.3e8 elements, but D and K stay tiny.
triple = assemble_triple({2, 4, 6})
print(f"\ntargets (2, 4, 6): |B| = {triple.module.size}, |D| = {triple.d_size()}, "
      f"|K| = {triple.k_order}")
print("traces:", sorted(orbit_trace_counts(triple.action, triple.d_elements())))

# Truncation tower: cyclic quotients with equivariant projections.
tower = compactify(assemble_triple({2, 3}))
print("\ntower of acting groups:", tower.k_orders())

# Dual-side record: the annihilator of D satisfies |H| * |D| = |B|.
rec = dualize(assemble_triple({2, 3}))
print(f"duality: |H| = {rec.annihilator_size}, |D| = {rec.triple.d_size()}, "
      f"|B| = {rec.triple.module.size}")
