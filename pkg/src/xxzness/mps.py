"""Exact matrix-product data for the driven-dissipative steady state.

The steady state is encoded by three tridiagonal bond-space matrices and a
boundary vector,

    A_T = sum_k a_k |k><k|,  A_1 = sum_k b_k |k+1><k|,  A_0 = sum_k c_k |k><k+1|,
    v_L = <0|,               v_R = sum_k alpha_k |k>,

acting on an (N+1)-dimensional auxiliary lattice.  The sequences obey
(units of J)

    a_0 = 1,  a_1 = Delta + i gamma/2,      a_{k+1} = 2 Delta a_k - a_{k-1},
    b_0 c_0 = i gamma/2,                    b_k c_k = b_{k-1} c_{k-1} + a_k (Delta a_k - a_{k-1}),
    c_k alpha_{k+1} + (sqrt2/Omega)(Delta a_k - a_{k+1}) alpha_k - b_{k-1} alpha_{k-1} = 0,

with alpha_0 = 1 and alpha_{-1} = 0 (the k = 0 row fixes alpha_1).  Only the
product b_k c_k is determined; the split is a gauge choice.  All sequences
are stored with per-entry log scales so the cosh-type growth at |Delta| > J
and the exponential localization of alpha at weak drive never overflow.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from . import scaled
from .errors import (CapacityError, DegenerateDriveError, GaugeError,
                     NumericalError, UnsupportedRegimeError, ValidationError)
from .model import ModelParams, detect_special_point, derive, REGIME_EASY_AXIS

GAUGE_C_UNIT = "c_unit"
GAUGE_WEAK_DISSIPATION = "weak_dissipation"
GAUGE_STOCHASTIC = "stochastic"

DRIVE_COHERENT = "coherent"
DRIVE_INCOHERENT = "incoherent"

SQRT2 = math.sqrt(2.0)

# local dimer basis ordering used for DoubledState amplitudes
DIMER_00 = 0   # both spins down
DIMER_11 = 1   # both spins up
DIMER_S = 2    # singlet (decoupled: amplitude identically zero)
DIMER_T = 3    # triplet


@dataclass(frozen=True, eq=False)
class MpsCoefficients:
    """One gauge realization of the bond-space data for a length-n chain.

    Sequences are (mantissa, log) pairs: the true value of e.g. ``a[k]`` is
    ``a[k] * exp(a_log[k])``.  For easy-axis parameters the logs are all 0
    and the mantissas are the plain values.
    """

    delta: float            # Delta/J
    gamma: float            # gamma/J
    omega: float            # Omega/J (nan for the incoherent variant)
    n: int
    gauge: str
    drive: str
    a: np.ndarray
    a_log: np.ndarray
    bc: np.ndarray
    bc_log: np.ndarray
    b: np.ndarray
    b_log: np.ndarray
    c: np.ndarray
    c_log: np.ndarray
    alpha: np.ndarray
    alpha_log: np.ndarray

    def a_dense(self) -> np.ndarray:
        return scaled.to_dense(self.a, self.a_log)

    def b_dense(self) -> np.ndarray:
        return scaled.to_dense(self.b, self.b_log)

    def c_dense(self) -> np.ndarray:
        return scaled.to_dense(self.c, self.c_log)

    def bc_dense(self) -> np.ndarray:
        return scaled.to_dense(self.bc, self.bc_log)

    def alpha_dense(self) -> np.ndarray:
        return scaled.to_dense(self.alpha, self.alpha_log)

    def log_abs2_post(self) -> np.ndarray:
        """log |alpha_k|^2, the post-selection weights."""
        return 2.0 * scaled.log_abs(self.alpha, self.alpha_log)


def _a_bc_recursion(delta: float, gamma: float, n: int):
    """Solve the a_k and b_k c_k recursions with per-entry log scales."""
    a = np.zeros(n + 1, dtype=complex)
    a_log = np.zeros(n + 1)
    bc = np.zeros(n, dtype=complex)
    bc_log = np.zeros(n)

    a[0] = 1.0
    a[1] = delta + 0.5j * gamma
    a[1], a_log[1] = scaled.srebalance(a[1], 0.0)
    for k in range(1, n):
        v, l = scaled.sadd(2.0 * delta * a[k], a_log[k], -a[k - 1], a_log[k - 1])
        a[k + 1], a_log[k + 1] = v, l

    bc[0] = 0.5j * gamma
    bc[0], bc_log[0] = scaled.srebalance(bc[0], 0.0)
    for k in range(1, n):
        # increment a_k (Delta a_k - a_{k-1}) at the scale of a_k
        inner, inner_log = scaled.sadd(delta * a[k], a_log[k], -a[k - 1], a_log[k - 1])
        incr, incr_log = scaled.srebalance(a[k] * inner, a_log[k] + inner_log)
        bc[k], bc_log[k] = scaled.sadd(bc[k - 1], bc_log[k - 1], incr, incr_log)
    return a, a_log, bc, bc_log


def _rational_trig(multiple: int, l: int, m: int):
    """(sin, cos) of (multiple * l * pi / m) with exact zeros at lattice points."""
    r = (multiple * l) % (2 * m)
    s = math.sin(math.pi * r / m) if r % m else 0.0
    cval = 0.0 if (2 * r - m) % (2 * m) == 0 else math.cos(math.pi * r / m)
    return s, cval


def _analytic_a(delta: float, gamma: float, n: int, special=None):
    """Closed form a_k = cos(k eta) + (i gamma/2) sin(k eta)/sin(eta), |Delta|<1."""
    eta = math.acos(delta)
    sin_eta = math.sin(eta)
    k = np.arange(n + 1)
    if special is not None:
        sins = np.array([_rational_trig(int(kk), special.l, special.m)[0] for kk in k])
        coss = np.array([_rational_trig(int(kk), special.l, special.m)[1] for kk in k])
    else:
        sins = np.sin(k * eta)
        coss = np.cos(k * eta)
    return coss + 0.5j * gamma * sins / sin_eta


def _analytic_split(delta: float, gamma: float, n: int, special=None):
    """Weak-dissipation gauge: b_k = sin((k+1) eta)/sqrt2 and the matching c_k.

    At a special point Delta = cos(l pi/m) the sines are evaluated with exact
    rational reduction so b_{nm-1} is exactly zero and the block structure of
    the transfer weights is machine-checkable.
    """
    eta = math.acos(delta)
    sin_eta = math.sin(eta)
    k = np.arange(n)
    if special is not None:
        sin_k = np.array([_rational_trig(int(kk), special.l, special.m)[0] for kk in k])
        cos_k = np.array([_rational_trig(int(kk), special.l, special.m)[1] for kk in k])
        sin_k1 = np.array([_rational_trig(int(kk) + 1, special.l, special.m)[0] for kk in k])
    else:
        sin_k = np.sin(k * eta)
        cos_k = np.cos(k * eta)
        sin_k1 = np.sin((k + 1) * eta)
    b = sin_k1 / SQRT2 + 0j
    c = (1j * gamma / sin_eta * cos_k - (1.0 + gamma**2 / (4.0 * sin_eta**2)) * sin_k) / SQRT2
    return b, c


def solve_alpha(coeffs_or_split, omega: float, n: int | None = None):
    """Drive-vector recursion alpha_k for a given gauge split (b, c).

    Accepts either an MpsCoefficients (its a/b/c are used) or a tuple
    ``(a, a_log, b, b_log, c, c_log, delta)``.  Returns (alpha, alpha_log).
    """
    if omega <= 0:
        raise DegenerateDriveError(
            "Omega = 0 leaves the polarized product state; no drive vector exists")
    if isinstance(coeffs_or_split, MpsCoefficients):
        cf = coeffs_or_split
        a, a_log, b, b_log, c, c_log, delta = cf.a, cf.a_log, cf.b, cf.b_log, cf.c, cf.c_log, cf.delta
        if n is None:
            n = cf.n
    else:
        a, a_log, b, b_log, c, c_log, delta = coeffs_or_split
        if n is None:
            n = len(a) - 1
    alpha = np.zeros(n + 1, dtype=complex)
    alpha_log = np.zeros(n + 1)
    alpha[0] = 1.0
    pref = SQRT2 / omega
    for k in range(n):
        if c[k] == 0:
            raise GaugeError(
                f"c_{k} = 0 in gauge split; use a gamma-carrying gauge (e.g. c_unit) "
                "to propagate the drive vector")
        inner, inner_log = scaled.sadd(delta * a[k], a_log[k], -a[k + 1], a_log[k + 1])
        t2, t2_log = scaled.srebalance(-pref * inner * alpha[k], inner_log + alpha_log[k])
        if k >= 1:
            t1, t1_log = scaled.srebalance(b[k - 1] * alpha[k - 1], b_log[k - 1] + alpha_log[k - 1])
            num, num_log = scaled.sadd(t1, t1_log, t2, t2_log)
        else:
            num, num_log = t2, t2_log
        alpha[k + 1], alpha_log[k + 1] = scaled.srebalance(num / c[k], num_log - c_log[k])
    return alpha, alpha_log


def solve_coefficients(params: ModelParams, gauge: str = GAUGE_C_UNIT) -> MpsCoefficients:
    """Solve the bond-space recursions for the coherently driven chain.

    Default gauge sets c_k = 1 (so b_k carries the full product b_k c_k);
    it never divides by zero in the drive-vector recursion.  The
    weak-dissipation gauge uses the analytic c_k split instead and is only
    defined in the easy-axis regime.
    """
    params.require_zero_temperature()
    if params.omega == 0:
        raise DegenerateDriveError(
            "Omega = 0: steady state is the fully polarized product state")
    delta, gamma, omega, n = params.delta_j, params.gamma_j, params.omega_j, params.n
    a, a_log, bc, bc_log = _a_bc_recursion(delta, gamma, n)
    if gauge == GAUGE_C_UNIT:
        b, b_log = bc.copy(), bc_log.copy()
        c, c_log = np.ones(n, dtype=complex), np.zeros(n)
    elif gauge == GAUGE_WEAK_DISSIPATION:
        if derive(params).regime != REGIME_EASY_AXIS:
            raise UnsupportedRegimeError("delta", "weak-dissipation gauge needs |Delta| < J")
        special = detect_special_point(delta)
        _, c_dense = _analytic_split(delta, gamma, n, special)
        c, c_log = scaled.rebalance(c_dense, np.zeros(n))
        b, b_log = scaled.rebalance(bc / c, bc_log - c_log)
    else:
        raise ValidationError("gauge", f"unknown gauge {gauge!r}")
    alpha, alpha_log = solve_alpha((a, a_log, b, b_log, c, c_log, delta), omega, n)
    return MpsCoefficients(delta=delta, gamma=gamma, omega=omega, n=n, gauge=gauge,
                           drive=DRIVE_COHERENT, a=a, a_log=a_log, bc=bc, bc_log=bc_log,
                           b=b, b_log=b_log, c=c, c_log=c_log,
                           alpha=alpha, alpha_log=alpha_log)


def analytic_coefficients(params: ModelParams) -> MpsCoefficients:
    """Closed-form coefficients in the weak-dissipation gauge (|Delta| < J).

    Independent of the recursion path; used to cross-check it.  b_k c_k is
    the analytic product, which must agree with the recursion.
    """
    params.require_zero_temperature()
    if derive(params).regime != REGIME_EASY_AXIS:
        raise UnsupportedRegimeError("delta", "analytic solution needs |Delta| < J")
    if params.omega == 0:
        raise DegenerateDriveError(
            "Omega = 0: steady state is the fully polarized product state")
    delta, gamma, omega, n = params.delta_j, params.gamma_j, params.omega_j, params.n
    special = detect_special_point(delta)
    a_dense = _analytic_a(delta, gamma, n, special)
    b_dense, c_dense = _analytic_split(delta, gamma, n, special)
    a, a_log = scaled.rebalance(a_dense, np.zeros(n + 1))
    b, b_log = scaled.rebalance(b_dense, np.zeros(n))
    c, c_log = scaled.rebalance(c_dense, np.zeros(n))
    bc, bc_log = scaled.rebalance(b * c, b_log + c_log)
    alpha, alpha_log = solve_alpha((a, a_log, b, b_log, c, c_log, delta), omega, n)
    return MpsCoefficients(delta=delta, gamma=gamma, omega=omega, n=n,
                           gauge=GAUGE_WEAK_DISSIPATION, drive=DRIVE_COHERENT,
                           a=a, a_log=a_log, bc=bc, bc_log=bc_log,
                           b=b, b_log=b_log, c=c, c_log=c_log,
                           alpha=alpha, alpha_log=alpha_log)


def solve_incoherent(params: ModelParams) -> MpsCoefficients:
    """Bond-space data for the incoherent pump/loss chain (equal rates).

    Same a_k and b_k c_k sequences; the drive vector collapses to |0>, i.e.
    alpha_k = delta_{k,0}.  Omega is ignored.
    """
    params.require_zero_temperature()
    delta, gamma, n = params.delta_j, params.gamma_j, params.n
    a, a_log, bc, bc_log = _a_bc_recursion(delta, gamma, n)
    b, b_log = bc.copy(), bc_log.copy()
    c, c_log = np.ones(n, dtype=complex), np.zeros(n)
    alpha = np.zeros(n + 1, dtype=complex)
    alpha[0] = 1.0
    alpha_log = np.zeros(n + 1)
    alpha_log[1:] = scaled.NEG_INF
    return MpsCoefficients(delta=delta, gamma=gamma, omega=float("nan"), n=n,
                           gauge=GAUGE_C_UNIT, drive=DRIVE_INCOHERENT,
                           a=a, a_log=a_log, bc=bc, bc_log=bc_log,
                           b=b, b_log=b_log, c=c, c_log=c_log,
                           alpha=alpha, alpha_log=alpha_log)


def weak_dissipation_alpha(omega: float, omega_c: float, n: int) -> np.ndarray:
    """|alpha_k|^2 in the gamma -> 0 limit: Chebyshev weights T_k(Omega_c/Omega)^2.

    Returns cos^2(k theta) with theta = arccos(Omega_c/Omega) above the
    critical drive and cosh^2(k theta) with theta = arccosh(Omega_c/Omega)
    below it.  May overflow to inf deep below the transition; use the full
    recursion (which carries log scales) when that matters.
    """
    if omega <= 0:
        raise DegenerateDriveError("Omega = 0 has no drive vector")
    if omega_c <= 0:
        raise ValidationError("omega_c", f"must be > 0, got {omega_c}")
    x = omega_c / omega
    k = np.arange(n + 1, dtype=float)
    if x <= 1.0:
        theta = math.acos(x)
        return np.cos(k * theta) ** 2
    theta = math.acosh(x)
    with np.errstate(over="ignore"):
        return np.cosh(k * theta) ** 2


def apply_gauge(coeffs: MpsCoefficients, v: np.ndarray) -> MpsCoefficients:
    """Diagonal gauge transformation with positive weights v_0..v_n.

    c_k -> c_k v_{k+1}/v_k, b_k -> b_k v_k/v_{k+1}, alpha_k -> alpha_k/v_k;
    a_k and the products b_k c_k are untouched, and all normalized
    observables are invariant.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (coeffs.n + 1,):
        raise ValidationError("v", f"need length n+1 = {coeffs.n + 1}, got {v.shape}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise GaugeError("gauge weights must be positive and finite")
    log_v = np.log(v)
    c, c_log = scaled.rebalance(coeffs.c, coeffs.c_log + log_v[1:] - log_v[:-1])
    b, b_log = scaled.rebalance(coeffs.b, coeffs.b_log + log_v[:-1] - log_v[1:])
    alpha, alpha_log = scaled.rebalance(coeffs.alpha, coeffs.alpha_log - log_v)
    return replace(coeffs, b=b, b_log=b_log, c=c, c_log=c_log,
                   alpha=alpha, alpha_log=alpha_log)


# ---------------------------------------------------------------------------
# explicit small-system objects

@dataclass(frozen=True, eq=False)
class DoubledState:
    """Explicit pure state of the chain + mirror chain, for small n.

    ``amplitudes`` is the 4^n vector over per-site dimer states ordered
    (both-down, both-up, singlet, triplet); site 1 is the most significant
    digit.  Singlet amplitudes are exactly zero by construction.
    """

    n: int
    amplitudes: np.ndarray
    norm: float

    def to_spin_vector(self) -> np.ndarray:
        """Amplitudes over 2n spins ordered A1,B1,A2,B2,... (up=0, down=1)."""
        # local unitary: columns are the dimer states in the (AB) spin basis
        u = np.zeros((4, 4), dtype=complex)
        u[:, DIMER_00] = [0, 0, 0, 1]
        u[:, DIMER_11] = [1, 0, 0, 0]
        u[:, DIMER_S] = np.array([0, 1, -1, 0]) / SQRT2
        u[:, DIMER_T] = np.array([0, 1, 1, 0]) / SQRT2
        psi = self.amplitudes.reshape((4,) * self.n)
        for ax in range(self.n):
            psi = np.moveaxis(np.tensordot(u, psi, axes=(1, ax)), 0, ax)
        return psi.reshape(-1)


MAX_DOUBLED_N = 8
MAX_CHOLESKY_N = 10


def build_doubled_state(coeffs: MpsCoefficients) -> DoubledState:
    """Materialize the doubled-chain pure state (n <= 8, 4^n amplitudes)."""
    n = coeffs.n
    if n > MAX_DOUBLED_N:
        raise CapacityError("n", f"doubled state needs 4^n amplitudes; n = {n} > {MAX_DOUBLED_N}")
    a = coeffs.a_dense()
    b = coeffs.b_dense()
    c = coeffs.c_dense()
    alpha = coeffs.alpha_dense()
    for name, arr in (("a", a), ("b", b), ("c", c), ("alpha", alpha)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"{name} overflows double precision; parameters too extreme "
                                 "for the explicit small-n construction")
    # rows[cfg] = <0| A_{s_1} ... A_{s_j} as a row vector over the bond space
    rows = np.zeros((1, n + 1), dtype=complex)
    rows[0, 0] = 1.0
    digits = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        stay = rows * a                                   # dimer T
        up = np.zeros_like(rows)                          # dimer 0: <k| -> c_k <k+1|
        up[:, 1:] = rows[:, :-1] * c
        down = np.zeros_like(rows)                        # dimer 1: <k| -> b_{k-1} <k-1|
        down[:, :-1] = rows[:, 1:] * b
        rows = np.concatenate([up, down, stay], axis=0)
        digits = np.concatenate([digits * 4 + DIMER_00,
                                 digits * 4 + DIMER_11,
                                 digits * 4 + DIMER_T])
    amps = rows @ alpha
    out = np.zeros(4**n, dtype=complex)
    out[digits] = amps
    norm = float(np.linalg.norm(out))
    if norm == 0 or not math.isfinite(norm):
        raise NumericalError("doubled state norm is degenerate or overflowed")
    return DoubledState(n=n, amplitudes=out, norm=norm)


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular factor Psi with rho_ss = Psi Psi^dag / Tr(Psi Psi^dag).

    Basis: spin-z product states with up = 0, down = 1 and site 1 as the most
    significant bit; index 0 is all-up, index 2^n - 1 is all-down.  Psi is
    normalized so every diagonal element is exactly 1.
    """

    n: int
    psi: np.ndarray

    def steady_state(self) -> np.ndarray:
        rho = self.psi @ self.psi.conj().T
        return rho / np.trace(rho).real


def build_cholesky(coeffs: MpsCoefficients) -> CholeskyFactor:
    """Assemble Psi for n <= 10 by a backward sweep over the bond index.

    Equivalent to contracting the doubled state with a spin-flipped mirror
    basis: per site, the both-up dimer becomes sigma^+, the both-down dimer
    sigma^-, the triplet the identity (unit-diagonal normalization).
    """
    n = coeffs.n
    if n > MAX_CHOLESKY_N:
        raise CapacityError("n", f"Cholesky factor is 2^n x 2^n dense; n = {n} > {MAX_CHOLESKY_N}")
    a = coeffs.a_dense()
    b = coeffs.b_dense()
    c = coeffs.c_dense()
    alpha = coeffs.alpha_dense()
    for name, arr in (("a", a), ("b", b), ("c", c), ("alpha", alpha)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"{name} overflows double precision at these parameters")
    # blocks[k] = sum over suffix configurations from site j with bond index k
    blocks = [np.array([[alpha[k]]], dtype=complex) for k in range(n + 1)]
    for j in range(n, 0, -1):
        d = blocks[0].shape[0]
        keep = j  # bond indices 0..j-1 are reachable from <0| after j-1 sites
        new = []
        for k in range(keep):
            m = np.zeros((2 * d, 2 * d), dtype=complex)
            m[:d, :d] = a[k] * blocks[k]
            m[d:, d:] = a[k] * blocks[k]
            if k >= 1:
                m[:d, d:] = (SQRT2 * b[k - 1]) * blocks[k - 1]
            if k + 1 <= n:
                m[d:, :d] = (SQRT2 * c[k]) * blocks[k + 1]
            new.append(m)
        # pad unreachable ks so indexing k+1 stays valid next round
        zero = np.zeros_like(new[0])
        blocks = new + [zero] * (n + 1 - keep)
    return CholeskyFactor(n=n, psi=blocks[0])


def coefficient_table(coeffs: MpsCoefficients):
    """Rows (k, Re/Im of a, bc, b, c, alpha, and their log scales) for export."""
    n = coeffs.n
    a, bc, b, c, al = (coeffs.a_dense(), coeffs.bc_dense(), coeffs.b_dense(),
                       coeffs.c_dense(), coeffs.alpha_dense())
    rows = []
    for k in range(n + 1):
        row = [k, a[k].real, a[k].imag]
        if k < n:
            row += [bc[k].real, bc[k].imag, b[k].real, b[k].imag, c[k].real, c[k].imag]
        else:
            row += [math.nan] * 6
        row += [al[k].real, al[k].imag]
        row += [float(coeffs.a_log[k]),
                float(coeffs.bc_log[k]) if k < n else math.nan,
                float(coeffs.alpha_log[k])]
        rows.append(row)
    columns = ["k", "re_a", "im_a", "re_bc", "im_bc", "re_b", "im_b", "re_c", "im_c",
               "re_alpha", "im_alpha", "log_a", "log_bc", "log_alpha"]
    return columns, rows
