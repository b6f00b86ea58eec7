"""Operational probabilistic theories, decoherence maps and numerical no-go checks."""
from .convex import info_dimension, is_pure, max_clique, perfectly_distinguishable
from .decoherence import (
    DecoherenceCandidate,
    build_subtheory,
    check_candidate,
    dephasing_map,
    postclassical_counterexample,
    postquantum_counterexample,
)
from .diagram import Diagram, evaluate, parse, probability, typecheck
from .errors import GPTError
from .linalg import partial_trace
from .nogo import run_nogo_suite
from .report import Check, VerificationReport
from .theory import (
    CLASSICAL,
    GBIT,
    QUANTUM,
    ProcessRep,
    SystemType,
    bell_state,
    compose_par,
    compose_seq,
    connect_purifications,
    is_causal,
    load_theory_spec,
    max_mixed,
    purify,
    unit_effect,
)

__version__ = "0.1.0"
