"""Steady-state observables from transfer contractions of the bond-space data.

All contractions reduce to propagating the row vector <0| through the
non-negative tridiagonal transfer weights

    T[k, k]   = |a_k|^2   (stay),
    T[k+1, k] = |b_k|^2   (walker k+1 -> k),
    T[k, k+1] = |c_k|^2   (walker k -> k+1),

with a per-entry log ledger: the weights span hundreds of orders of
magnitude at large N, so plain doubles would under/overflow.  The
probability of ending on bond index k after N steps, post-selected with
|alpha_k|^2, gives the magnetization; partition-function ratios give the
spin current; insertions of the signed single-site weight give spin-spin
correlations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import scaled
from .errors import NumericalError, ValidationError
from .mps import MpsCoefficients

NEG_INF = scaled.NEG_INF


@dataclass(frozen=True, eq=False)
class TransferChain:
    """Log-space transfer weights plus post-selection weights.

    ``log_diag[k] = log |a_k|^2`` etc.; ``log_post[k] = log |alpha_k|^2``.
    ``log_c2`` records a uniform rescaling of all weights (used by the
    probability-conserving gauge) so partition-function ratios can be
    corrected back to the physical normalization.
    """

    n: int
    log_diag: np.ndarray
    log_up: np.ndarray      # weight for walker k -> k+1, i.e. |c_k|^2
    log_down: np.ndarray    # weight for walker k+1 -> k, i.e. |b_k|^2
    log_post: np.ndarray
    gamma: float
    log_c2: float = 0.0
    gauge: str = "c_unit"

    @property
    def diag(self) -> np.ndarray:
        return np.exp(self.log_diag)

    @property
    def up(self) -> np.ndarray:
        return np.exp(self.log_up)

    @property
    def down(self) -> np.ndarray:
        return np.exp(self.log_down)

    @property
    def post(self) -> np.ndarray:
        return np.exp(self.log_post)


def build_transfer_chain(coeffs: MpsCoefficients, n: int | None = None) -> TransferChain:
    """Transfer weights |a_k|^2, |b_k|^2, |c_k|^2 for a length-n prefix."""
    n = coeffs.n if n is None else n
    if not 2 <= n <= coeffs.n:
        raise ValidationError("n", f"need 2 <= n <= {coeffs.n}, got {n}")
    log_diag = 2.0 * scaled.log_abs(coeffs.a[: n + 1], coeffs.a_log[: n + 1])
    log_down = 2.0 * scaled.log_abs(coeffs.b[:n], coeffs.b_log[:n])
    log_up = 2.0 * scaled.log_abs(coeffs.c[:n], coeffs.c_log[:n])
    log_post = 2.0 * scaled.log_abs(coeffs.alpha[: n + 1], coeffs.alpha_log[: n + 1])
    return TransferChain(n=n, log_diag=log_diag, log_up=log_up, log_down=log_down,
                         log_post=log_post, gamma=coeffs.gamma, gauge=coeffs.gauge)


def _step(u, ulog, chain: TransferChain, insert_z: bool = False):
    """One row-propagation step u <- u T (or u Z for a correlation insertion).

    Z drops the diagonal weight and flips the sign of the downward (c) term:
    Z[k+1, k] = |b_k|^2, Z[k, k+1] = -|c_k|^2.
    """
    n = chain.n
    up_v = np.zeros_like(u)
    up_l = np.full(n + 1, NEG_INF)
    up_v[1:] = u[:-1]
    up_l[1:] = ulog[:-1] + chain.log_up
    down_v = np.zeros_like(u)
    down_l = np.full(n + 1, NEG_INF)
    down_v[:-1] = u[1:] * (-1.0 if insert_z else 1.0)
    down_l[:-1] = ulog[1:] + chain.log_down
    if insert_z:
        return scaled.scaled_sum([(up_v, up_l), (down_v, down_l)])
    stay_v = u
    stay_l = ulog + chain.log_diag
    return scaled.scaled_sum([(stay_v, stay_l), (up_v, up_l), (down_v, down_l)])


def transfer_propagate(chain: TransferChain, steps: int):
    """Row vector <0| T^steps as (mantissa, log) arrays of length n+1.

    Cost is O(n) per step.  Mantissas are non-negative; entries for bond
    indices unreachable in ``steps`` moves are exactly zero.
    """
    if steps < 0:
        raise ValidationError("steps", f"must be >= 0, got {steps}")
    u = np.zeros(chain.n + 1)
    ulog = np.full(chain.n + 1, NEG_INF)
    u[0] = 1.0
    ulog[0] = 0.0
    for _ in range(steps):
        u, ulog = _step(u, ulog, chain)
    return u, ulog


def _log_partition(u, ulog, chain: TransferChain) -> float:
    """log Z = log sum_k f(k) |alpha_k|^2 for a propagated row vector."""
    logs = scaled.log_abs(u, ulog) + chain.log_post
    return scaled.logsumexp(logs)


@dataclass(frozen=True, eq=False)
class NessObservables:
    """Scalar observables plus the bond-occupation distribution p_k."""

    magnetization: float
    current: float
    log_current: float
    z_ratio: float
    p: np.ndarray


def _observables_from_row(u, ulog, chain: TransferChain, log_z_prev: float) -> NessObservables:
    n = chain.n
    logp = scaled.log_abs(u, ulog) + chain.log_post
    log_z = scaled.logsumexp(logp)
    if log_z == NEG_INF:
        raise NumericalError("all transfer weights vanished; cannot normalize p_k")
    p = np.exp(logp - log_z)
    p /= p.sum()
    magnetization = -float(np.dot(np.arange(n + 1) / n, p))
    log_ratio = log_z_prev - log_z + chain.log_c2
    z_ratio = math.exp(log_ratio) if log_ratio < 700 else math.inf
    log_current = math.log(0.5 * chain.gamma) + log_ratio
    current = math.exp(log_current) if log_current < 700 else math.inf
    return NessObservables(magnetization=magnetization, current=current,
                           log_current=log_current, z_ratio=z_ratio, p=p)


def magnetization(coeffs: MpsCoefficients, n: int | None = None) -> NessObservables:
    """Magnetization density, spin current, and p_k for a length-n chain.

    The current is the magnitude of i <sp_m sm_{m+1} - h.c.> (flux from the
    driven edge toward the lossy edge), equal to (gamma / 2J) Z_{N-1}/Z_N;
    it is site independent in the steady state.
    """
    chain = build_transfer_chain(coeffs, n)
    u, ulog = transfer_propagate(chain, chain.n - 1)
    log_z_prev = _log_partition(u, ulog, chain)
    u, ulog = _step(u, ulog, chain)
    return _observables_from_row(u, ulog, chain, log_z_prev)


def current(coeffs: MpsCoefficients, n: int | None = None) -> float:
    """Steady spin current (gamma / 2J) Z_{N-1} / Z_N, non-negative."""
    return magnetization(coeffs, n).current


def polarized_observables(n: int) -> NessObservables:
    """Exact observables of the Omega = 0 steady state |down...down>."""
    p = np.zeros(n + 1)
    p[n] = 1.0
    return NessObservables(magnetization=-1.0, current=0.0, log_current=NEG_INF,
                           z_ratio=0.0, p=p)


def zz_correlation(coeffs: MpsCoefficients, site_a: int, site_b: int,
                   n: int | None = None) -> float:
    """<sz_a sz_b> from two signed insertions along the transfer contraction."""
    chain = build_transfer_chain(coeffs, n)
    n = chain.n
    if not (1 <= site_a < site_b <= n):
        raise ValidationError("sites", f"need 1 <= a < b <= {n}, got ({site_a}, {site_b})")
    u = np.zeros(n + 1)
    ulog = np.full(n + 1, NEG_INF)
    u[0] = 1.0
    ulog[0] = 0.0
    log_z = None
    for step in range(n):
        if step == site_a - 1 or step == site_b - 1:
            u2, ulog2 = _step(u, ulog, chain, insert_z=True)
            u, ulog = u2, ulog2
        else:
            u, ulog = _step(u, ulog, chain)
    # signed partition sum over post weights
    sign = np.sign(u)
    logs = scaled.log_abs(u, ulog) + chain.log_post
    m = np.max(logs)
    if m == NEG_INF:
        raise NumericalError("correlation contraction vanished")
    num = float(np.sum(sign * np.exp(logs - m)))
    # plain Z_N
    f, flog = transfer_propagate(chain, n)
    zlogs = scaled.log_abs(f, flog) + chain.log_post
    mz = np.max(zlogs)
    den = float(np.sum(np.exp(zlogs - mz)))
    return num / den * math.exp(m - mz)


def observables_vs_drive(coeffs: MpsCoefficients, omegas) -> list[NessObservables]:
    """Observables over a drive sweep, reusing the Omega-independent weights.

    The transfer weights depend only on (Delta, gamma); only the drive
    vector has to be recomputed per Omega, so a sweep costs one O(N^2)
    propagation plus O(N) per point.
    """
    from .mps import solve_alpha

    n = coeffs.n
    base = build_transfer_chain(coeffs)
    u_prev, ulog_prev = transfer_propagate(base, n - 1)
    u_fin, ulog_fin = _step(u_prev, ulog_prev, base)
    out = []
    for omega in np.asarray(omegas, dtype=float):
        alpha, alpha_log = solve_alpha(coeffs, float(omega))
        log_post = 2.0 * scaled.log_abs(alpha, alpha_log)
        chain = TransferChain(n=n, log_diag=base.log_diag, log_up=base.log_up,
                              log_down=base.log_down, log_post=log_post,
                              gamma=coeffs.gamma, gauge=coeffs.gauge)
        log_z_prev = _log_partition(u_prev, ulog_prev, chain)
        out.append(_observables_from_row(u_fin, ulog_fin, chain, log_z_prev))
    return out


def observables_vs_size(coeffs: MpsCoefficients, sizes) -> list[NessObservables]:
    """Observables for several chain lengths in a single propagation pass.

    Valid because the coefficient sequences are prefix-stable in N: the
    length-n chain uses a_0..a_n, alpha_0..alpha_n of any longer solve.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if sizes[0] < 2 or sizes[-1] > coeffs.n:
        raise ValidationError("sizes", f"need 2 <= n <= {coeffs.n}")
    chain = build_transfer_chain(coeffs)
    want = set(sizes)
    u = np.zeros(chain.n + 1)
    ulog = np.full(chain.n + 1, NEG_INF)
    u[0] = 1.0
    ulog[0] = 0.0
    rows = {}
    log_zs = {}
    for step in range(1, sizes[-1] + 1):
        u, ulog = _step(u, ulog, chain)
        if step in want or (step + 1) in want:
            # restrict to the sub-chain's bond space (k <= n is automatic:
            # unreachable ks are exactly zero after n steps)
            log_zs[step] = _log_partition(u, ulog, chain)
        if step in want:
            rows[step] = (u.copy(), ulog.copy())
    out = []
    for s in sizes:
        u_s, ulog_s = rows[s]
        sub = TransferChain(n=s, log_diag=chain.log_diag[: s + 1], log_up=chain.log_up[:s],
                            log_down=chain.log_down[:s], log_post=chain.log_post[: s + 1],
                            gamma=coeffs.gamma, log_c2=chain.log_c2, gauge=coeffs.gauge)
        out.append(_observables_from_row(u_s[: s + 1], ulog_s[: s + 1], sub, log_zs[s - 1]))
    return out


def entanglement_entropy(coeffs: MpsCoefficients, cut: int, n: int | None = None) -> float:
    """Von Neumann entropy of the doubled pure state across the bond after ``cut``.

    The left Gram matrix is diagonal with entries <0|T^cut|k>; the right
    environment is accumulated as a (N+1)^2 matrix with a per-entry log
    ledger.  Eigenvalues below 1e-14 of the normalized reduced state are
    numerical zeros and are dropped.
    """
    n = coeffs.n if n is None else n
    if not 1 <= cut < n:
        raise ValidationError("cut", f"need 1 <= cut < {n}, got {cut}")
    chain = build_transfer_chain(coeffs, n)
    f, flog = transfer_propagate(chain, cut)
    log_f = scaled.log_abs(f, flog)

    a, a_log = coeffs.a[: n + 1], coeffs.a_log[: n + 1]
    b, b_log = coeffs.b[:n], coeffs.b_log[:n]
    c, c_log = coeffs.c[:n], coeffs.c_log[:n]
    alpha, alpha_log = coeffs.alpha[: n + 1], coeffs.alpha_log[: n + 1]

    # right environment G[k,k'] = sum over suffix configs <k|A...v_R> <A...v_R|k'>
    g = np.outer(alpha, alpha.conj())
    g_log = alpha_log[:, None] + alpha_log[None, :]
    for _ in range(n - cut):
        stay = g * (a[:, None] * a.conj()[None, :])
        stay_l = g_log + a_log[:, None] + a_log[None, :]
        dn = np.zeros_like(g)
        dn_l = np.full(g.shape, NEG_INF)
        dn[1:, 1:] = g[:-1, :-1] * (b[:, None] * b.conj()[None, :])
        dn_l[1:, 1:] = g_log[:-1, :-1] + b_log[:, None] + b_log[None, :]
        upm = np.zeros_like(g)
        up_l = np.full(g.shape, NEG_INF)
        upm[:-1, :-1] = g[1:, 1:] * (c[:, None] * c.conj()[None, :])
        up_l[:-1, :-1] = g_log[1:, 1:] + c_log[:, None] + c_log[None, :]
        g, g_log = scaled.scaled_sum([(stay, stay_l), (dn, dn_l), (upm, up_l)])

    k_max = cut  # <0| reaches at most bond index `cut` after `cut` sites
    log_m = 0.5 * (log_f[: k_max + 1, None] + log_f[None, : k_max + 1]) \
        + g_log[: k_max + 1, : k_max + 1]
    mant = np.sqrt(np.abs(f[: k_max + 1]))[:, None] * np.sqrt(np.abs(f[: k_max + 1]))[None, :] \
        * g[: k_max + 1, : k_max + 1]
    top = np.max(log_m[np.isfinite(log_m)]) if np.any(np.isfinite(log_m)) else NEG_INF
    if top == NEG_INF:
        raise NumericalError("degenerate zero-norm state at this cut")
    with np.errstate(under="ignore"):
        mat = mant * np.exp(np.where(np.isfinite(log_m), log_m - top, NEG_INF))
    mat = 0.5 * (mat + mat.conj().T)
    evals = np.linalg.eigvalsh(mat)
    evals = evals[evals > 0]
    total = evals.sum()
    if total <= 0:
        raise NumericalError("degenerate zero-norm state at this cut")
    p = evals / total
    p = p[p > 1e-14]
    return float(-(p * np.log(p)).sum())
