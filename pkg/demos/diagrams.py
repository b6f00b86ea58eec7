"""
Wiring processes together
=========================

Diagrams are built from named processes with ``;`` (sequence) and ``*``
(side by side), then evaluated to a single process.  Only the wiring
matters, so any sweep order gives the same answer.
"""
from pathlib import Path

import numpy as np

from gptverify import QUANTUM, diagram

here = Path(__file__).parent

# half of a Bell pair, with the other half thrown away
d = diagram.parse_file(here / "circuits" / "bell_marginal.gpt")
rho = QUANTUM.operator(diagram.evaluate(d))
print("reduced Bell state:\n", np.round(rho.real, 12))

# closed diagrams are probabilities
for src in ["plus(q2) ; effect0(q2)",
            "plus(q2) ; unitary(q2, H) ; effect0(q2)",
            "plus(q2) ; dephase(q2) ; unitary(q2, H) ; effect0(q2)"]:
    print(f"{src:55s} -> {diagram.probability(diagram.parse(src)):.6f}")

# user processes can be bound by name
rng = np.random.default_rng(0)
q2, q3 = QUANTUM.system(2), QUANTUM.system(3)
procs = {
    "f": QUANTUM.sample_transformation(q2, q3, rng),
    "g": QUANTUM.sample_transformation(q3, q2, rng),
    "s": QUANTUM.sample_state(q2, rng),
}
loop = diagram.parse("s ; f ; g", procs)
print("random orders agree:",
      all(np.allclose(diagram.evaluate(loop, seed=k).vector, diagram.evaluate(loop).vector) for k in range(5)))

# mistakes are reported with a location
try:
    diagram.parse("bell(2) ; id(q3)", filename="demo.gpt")
except diagram.TypeMismatch as e:
    print("diagnostic:", e.format())
