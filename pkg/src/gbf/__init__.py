"""Fermionic and bosonic quantization of linear field theories on Krein spaces.

Setting ``GBF_THREADS`` caps the thread pools of the numerical backends;
it only has an effect when set before numpy is first imported.
"""

import os as _os

_threads = _os.environ.get("GBF_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .config import override, settings  # noqa: E402
from .krein import (  # noqa: E402
    BOSONIC,
    FERMIONIC,
    Conjugation,
    KreinSpace,
    RealSubspace,
    check_subspace_c5,
    conjugation_from_subspace,
    direct_sum,
    orientation_reverse,
)
from .fock import FockState, fock_inner, gen_inner, generating_state, iota, tau_merge  # noqa: E402
from .spacetime import TheoryBuilder, TheorySpec, check_classical_axioms, classical_evolution  # noqa: E402
from .amplitude import AmplitudeContext, probability, quantum_evolution  # noqa: E402
from .gluing import Cutoff, anomaly, anomaly_limit, check_t5a, check_t5b, check_t5b_renormalized  # noqa: E402
from .report import Check, Report  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "BOSONIC", "FERMIONIC", "KreinSpace", "RealSubspace", "Conjugation", "check_subspace_c5",
    "conjugation_from_subspace", "direct_sum", "orientation_reverse", "FockState", "fock_inner",
    "gen_inner", "generating_state", "iota", "tau_merge", "TheoryBuilder", "TheorySpec",
    "check_classical_axioms", "classical_evolution", "AmplitudeContext", "probability",
    "quantum_evolution", "Cutoff", "anomaly", "anomaly_limit", "check_t5a", "check_t5b",
    "check_t5b_renormalized", "Check", "Report", "override", "settings",
]
