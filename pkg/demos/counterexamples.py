"""
Two maps that look like decoherence but are not
===============================================

Both maps below are causal and idempotent.  They fail because pure states
of the image are mixed in the larger theory, and because the image has
fewer perfectly distinguishable states than the system it sits in.
"""
import numpy as np

from gptverify import check_candidate, postclassical_counterexample, postquantum_counterexample

cands = [postclassical_counterexample(2, [0.5, 0.5]), postquantum_counterexample(2, np.eye(2) / 2)]
for cand in cands:
    rep = check_candidate(cand)
    print(cand.label)
    for c in rep:
        print(f"  {c.name.split('.')[-1]:28s} {c.status}")
    purity = next(c for c in rep if c.name.endswith("purity_preservation"))
    w = purity.witness
    print("  pure in the image, mixed outside:", np.round(w["state"], 6))
    mix = w["decomposition"]
    for p, comp in zip(mix.weights, mix.components):
        print(f"    {p:.3f} x {np.round(comp.vector, 6)}")
    dim = next(c for c in rep if c.name.endswith("dimension_preservation"))
    print(f"  distinguishable states: {dim.witness['parent']} before, {dim.witness['subtheory']} after\n")
