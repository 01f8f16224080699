"""C*-extremality of completely positive maps on finite-dimensional C*-algebras."""

from .certificates import EXTREME, INCONCLUSIVE, NOT_EXTREME, Verdict, check_verdict
from .cpmap import AlgebraSpec, CpMap, algebra, from_choi, from_kraus
from .extremal import (
    ccp_cstar_extreme,
    cp_p_cstar_extreme,
    decide,
    linear_extreme,
    ucp_cstar_extreme,
)
from .linalg import DEFAULT_TOL, Tolerances

__version__ = "0.1.0"

__all__ = [
    "AlgebraSpec",
    "CpMap",
    "DEFAULT_TOL",
    "EXTREME",
    "INCONCLUSIVE",
    "NOT_EXTREME",
    "Tolerances",
    "Verdict",
    "algebra",
    "ccp_cstar_extreme",
    "check_verdict",
    "cp_p_cstar_extreme",
    "decide",
    "from_choi",
    "from_kraus",
    "linear_extreme",
    "ucp_cstar_extreme",
]
