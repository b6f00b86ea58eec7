"""
Why quantum theory has no further decoherence
=============================================

Walk the argument step by step for a qutrit, then run the whole suite.
"""
from gptverify import QUANTUM, nogo
from gptverify.decoherence import dephasing_map, identity_candidate

d = 3
steps = [
    nogo.verify_bell_marginals(d),
    *nogo.verify_mu_invariance(d, 50),
    *nogo.verify_any_state_decomposition(d, 30),
    *nogo.verify_steering(d, 20),
    *nogo.verify_hyperdec_identity(identity_candidate(QUANTUM, QUANTUM.system(d)), d),
]
for c in steps:
    print(f"{c.name:45s} {c.status}  residual {c.residual:.1e}")

# dephasing keeps the classical part but breaks the entangled state
loc = nogo.verify_local_invariance(dephasing_map(d), d, expected="fail")
print(f"\ndephasing one half of a Bell pair: residual {loc.residual:.3f}")
print("rejected at:", nogo.rejection_check(dephasing_map(d), d, "local_invariance").witness["failed_item"])

# the counting argument: every pure effect sees I/d with weight 1/d
print()
for c in nogo.verify_info_counting(d, witness=False):
    print(f"{c.name:45s} {c.status}")

rep = nogo.run_nogo_suite([2, 3])
print(f"\nfull suite: {len(rep)} checks, all as expected: {rep.ok}")
