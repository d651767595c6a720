"""Model parameters and derived quantities for the boundary-driven XXZ chain.

Hamiltonian convention used throughout the package::

    H = sum_j [ J (sp_j sm_{j+1} + sm_j sp_{j+1}) + (Delta/2) sz_j sz_{j+1} ]
        + (Omega/2) sx_N

with loss D[sm_1] at rate gamma (sp/sm are the raising/lowering operators,
sz the Pauli-z matrix).  With this normalization the bond-space recursions
take their simplest form, the critical drive sits at
Omega_c = sqrt(J^2 - Delta^2), and the isotropic (Heisenberg) point is
Delta = J.  Energies are quoted in units of J.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ValidationError

#: |Delta/J - 1| below this is treated as the Heisenberg point; avoids
#: sin(eta) -> 0 blowups in the analytic branches.
HEISENBERG_TOL = 1e-12

REGIME_EASY_AXIS = "easy_axis"
REGIME_HEISENBERG = "heisenberg"
REGIME_INSULATING = "insulating"


@dataclass(frozen=True)
class ModelParams:
    """Physical couplings of one chain instance.

    Attributes
    ----------
    J : float
        Hopping amplitude, > 0.  Sets the unit of energy.
    delta : float
        Anisotropy (same units as J).
    omega : float
        Coherent drive amplitude on site N, >= 0.
    gamma : float
        Loss rate on site 1, > 0.
    n : int
        Chain length, >= 2.
    n_th : float
        Thermal occupation of the loss bath.  Must be 0 for every
        exact-solution path; n_th > 0 is only meaningful in the dense
        Lindblad module.
    """

    J: float
    delta: float
    omega: float
    gamma: float
    n: int
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("J", "delta", "omega", "gamma", "n_th"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValidationError(name, f"must be finite, got {value!r}")
        if self.J <= 0:
            raise ValidationError("J", f"must be > 0, got {self.J}")
        if self.gamma <= 0:
            raise ValidationError("gamma", f"must be > 0, got {self.gamma}")
        if self.omega < 0:
            raise ValidationError("omega", f"must be >= 0, got {self.omega}")
        if self.n_th < 0:
            raise ValidationError("n_th", f"must be >= 0, got {self.n_th}")
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ValidationError("n", f"must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ValidationError("n", f"must be >= 2, got {self.n}")

    # reduced couplings (units of J)
    @property
    def delta_j(self) -> float:
        return self.delta / self.J

    @property
    def omega_j(self) -> float:
        return self.omega / self.J

    @property
    def gamma_j(self) -> float:
        return self.gamma / self.J

    def require_zero_temperature(self):
        """Exact-solution paths hold only for a zero-temperature bath."""
        if self.n_th != 0.0:
            raise ValidationError("n_th", "exact solution requires n_th = 0")


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from ModelParams.

    ``eta`` is the complex angle with cos(eta) = Delta/J; it is real in
    (0, pi) for |Delta| < J and acquires an imaginary part otherwise, so a
    single recursion code path covers all regimes.  ``omega_c`` is the
    critical drive sqrt(J^2 - Delta^2), present only for |Delta| < J.
    """

    eta: complex
    omega_c: float | None
    regime: str


def regime_of(delta_over_j: float) -> str:
    if abs(abs(delta_over_j) - 1.0) < HEISENBERG_TOL:
        return REGIME_HEISENBERG
    if abs(delta_over_j) < 1.0:
        return REGIME_EASY_AXIS
    return REGIME_INSULATING


def derive(params: ModelParams) -> DerivedParams:
    """Classify the regime and compute eta and the critical drive."""
    x = params.delta_j
    regime = regime_of(x)
    eta = cmath.acos(complex(x, 0.0))
    if regime == REGIME_EASY_AXIS:
        omega_c = params.J * math.sqrt(1.0 - x * x)
    else:
        omega_c = None
    return DerivedParams(eta=eta, omega_c=omega_c, regime=regime)


@dataclass(frozen=True)
class SpecialPoint:
    """Anisotropy Delta/J = cos(l pi / m) with l/m a reduced fraction in (0, 1).

    At these points the bond-space weights become m-periodic and the exact
    solution truncates; the magnetization shows a resonance and the drive
    transition disappears.
    """

    l: int
    m: int
    delta_over_j: float

    def __post_init__(self):
        if self.m < 2 or self.l < 1 or self.l >= self.m:
            raise ValidationError("l/m", f"need 1 <= l < m with m >= 2, got {self.l}/{self.m}")
        if math.gcd(self.l, self.m) != 1:
            raise ValidationError("l/m", f"{self.l}/{self.m} is not in lowest terms")


def nearest_special_points(delta_over_j: float, max_m: int) -> list[SpecialPoint]:
    """All special points with m <= max_m, sorted by |cos(l pi/m) - Delta/J|.

    Ties are broken by (m, l) so the ordering is deterministic.
    """
    if not abs(delta_over_j) < 1:
        raise ValidationError("delta_over_j", f"need |Delta/J| < 1, got {delta_over_j}")
    if max_m < 2:
        raise ValidationError("max_m", f"must be >= 2, got {max_m}")
    points = []
    for m in range(2, max_m + 1):
        for l in range(1, m):
            if math.gcd(l, m) == 1:
                points.append(SpecialPoint(l=l, m=m, delta_over_j=math.cos(l * math.pi / m)))
    points.sort(key=lambda p: (abs(p.delta_over_j - delta_over_j), p.m, p.l))
    return points


def detect_special_point(delta_over_j: float, max_m: int = 64, tol: float = 1e-12) -> SpecialPoint | None:
    """Return the special point matching Delta/J to within ``tol``, if any.

    Uses Fraction to recover l/m from acos(Delta/J)/pi, then confirms the
    match in Delta itself; used to install exact zeros in the analytic
    coefficient gauge.
    """
    if not abs(delta_over_j) < 1:
        return None
    ratio = math.acos(delta_over_j) / math.pi
    frac = Fraction(ratio).limit_denominator(max_m)
    l, m = frac.numerator, frac.denominator
    if m < 2 or l < 1 or l >= m:
        return None
    value = math.cos(l * math.pi / m)
    if abs(value - delta_over_j) < tol:
        return SpecialPoint(l=l, m=m, delta_over_j=value)
    return None
