"""
C¹ cubic switch between 1 (below the lower break) and 0 (above the upper break).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from hsctrl.core.exceptions import ConfigError


@dataclass(frozen=True)
class SwitchFunction:
    """phi(chi) = a3 chi^3 + a2 chi^2 + a1 chi + a0 on [lower, upper]; 0 above, 1 below"""

    upper: float
    lower: float
    coeffs: Tuple[float, float, float, float]

    def __call__(self, chi: float) -> float:
        return eval_switch(self, chi)

    def derivative(self, chi: float) -> float:
        if chi > self.upper or chi < self.lower:
            return 0.0
        _, a1, a2, a3 = self.coeffs
        return (3.0 * a3 * chi + 2.0 * a2) * chi + a1


def make_switch(upper: float, lower: float) -> SwitchFunction:
    """Closed-form coefficients of the cubic meeting phi(upper)=0, phi(lower)=1, phi'=0 at both"""
    if not (math.isfinite(upper) and math.isfinite(lower)):
        raise ConfigError("switch breaks must be finite")
    if upper <= lower:
        raise ConfigError(f"switch upper break must exceed lower break, got ({upper}, {lower})")
    bu, bl = float(upper), float(lower)
    cube = (bl - bu) ** 3
    a0 = bu * bu * (3.0 * bl - bu) / cube
    a1 = -6.0 * bl * bu / cube
    a2 = 3.0 * (bl + bu) / cube
    a3 = -2.0 / cube
    return SwitchFunction(bu, bl, (a0, a1, a2, a3))


def eval_switch(s: SwitchFunction, chi: float) -> float:
    if chi > s.upper:
        return 0.0
    if chi < s.lower:
        return 1.0
    a0, a1, a2, a3 = s.coeffs
    value = ((a3 * chi + a2) * chi + a1) * chi + a0
    # rounding in the cubic may stray a few ulps outside [0, 1]
    return min(1.0, max(0.0, value))
