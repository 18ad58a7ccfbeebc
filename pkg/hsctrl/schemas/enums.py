"""
Scenario Enums

String enums shared by the scenario file schema and the services that
consume it. Values are the literal spellings accepted in scenario files.
"""

from enum import Enum


class ControlMode(str, Enum):
    """Initial-condition handling"""
    SEMIGLOBAL = "semiglobal"
    GLOBAL = "global"


class BarrierKind(str, Enum):
    """Barrier applied to alpha_h and e_s; only the reciprocal one is implemented"""
    RECIPROCAL = "reciprocal"
    LOG = "log"


class TransformKind(str, Enum):
    """Funnel transformation; only the log ratio is implemented"""
    LOG = "log"
    TAN = "tan"


class Monitor(str, Enum):
    """Per-record invariant monitors run by the simulator"""
    HARD_INVARIANCE = "hard_invariance"
    SOFT_INVARIANCE = "soft_invariance"
    FUNNELS = "funnels"
    RELAXATION_SIGN = "relaxation_sign"
    FINITE = "finite"


class DisturbanceKind(str, Enum):
    """Named robot disturbances; custom ones are given as two signals"""
    NONE = "none"
    REFERENCE = "reference"
