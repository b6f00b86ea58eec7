"""
Dephasing as decoherence
========================

Dephasing in a fixed basis is the textbook way a quantum system turns
classical.  Here we check the four properties asked of a decoherence map
and look at the sub-theory it leaves behind.
"""
import numpy as np

from gptverify import QUANTUM, build_subtheory, check_candidate, dephasing_map, info_dimension

for d in range(2, 6):
    rep = check_candidate(dephasing_map(d))
    worst = max(c.residual for c in rep)
    print(f"d={d}: {'all pass' if rep.passed else 'FAILED'} (worst residual {worst:.1e})")

# the image of the map is a classical system: a simplex of d point masses
sub = build_subtheory(dephasing_map(3))
iso = sub.classical_isomorphism()
print("sub-theory is classical:", iso.classical_type.label)
print("round trip residuals:", {k: f"{v:.1e}" for k, v in iso.residuals().items()})

# a mixed state of the parent becomes a probability vector
rho = QUANTUM.sample_state(QUANTUM.system(3), np.random.default_rng(1))
print("populations:", np.round(iso.to_classical @ sub.state(rho).vector, 6))

# the number of perfectly distinguishable states does not change
print("information dimension, parent:", info_dimension(QUANTUM, QUANTUM.system(3)).value,
      " sub-theory:", sub.info_dimension().value)
