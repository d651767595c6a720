"""Classical-walk picture of the steady state and critical-behavior fits.

The transfer weights define a lazy walker on the bond lattice: from site k
it hops right with probability w_k, left with probability w_k, and stays
put otherwise, where w_k = sin^2(k eta)/2 in the weak-dissipation limit.
A diagonal gauge makes the exact weights probability conserving for any
parameters.  The magnetization is the post-selected displacement of that
walker, which motivates the free-energy decomposition F = g + h used to
locate the drive transition and extract its exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize

from . import scaled
from .errors import GaugeError, NumericalError, ValidationError
from .mps import MpsCoefficients
from .observables import TransferChain, build_transfer_chain, transfer_propagate, _log_partition

NEG_INF = scaled.NEG_INF

KIND_QUASIPERIODIC = "quasiperiodic"
KIND_RANDOM_IID = "random_iid"
KIND_UNIFORM_QUARTER = "uniform_quarter"


@dataclass(frozen=True, eq=False)
class WalkEnvironment:
    """Hop weights of the lazy walk on sites 0..len(w)-1.

    From site k >= 1 the walker hops right or left with probability w_k each
    and stays with 1 - 2 w_k.  Site 0 has no left hop; its right hop uses
    ``entry`` (the quasiperiodic w_0 vanishes identically, mirroring the
    O(gamma^2) bond out of the polarized configuration, so an explicit entry
    weight is needed for the walk to leave the origin).
    """

    kind: str
    w: np.ndarray
    entry: float
    eta: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if np.any(w < 0) or np.any(w > 0.5):
            raise ValidationError("w", "hop weights must lie in [0, 1/2]")
        if not 0 <= self.entry <= 1:
            raise ValidationError("entry", f"must be in [0, 1], got {self.entry}")

    @property
    def length(self) -> int:
        return len(self.w)

    def hop_right(self) -> np.ndarray:
        r = np.asarray(self.w, dtype=float).copy()
        r[0] = self.entry
        r[-1] = 0.0  # closed at the far end; keep it out of reach
        return r

    def hop_left(self) -> np.ndarray:
        l = np.asarray(self.w, dtype=float).copy()
        l[0] = 0.0
        return l

    def stay(self) -> np.ndarray:
        return 1.0 - self.hop_right() - self.hop_left()


def quasiperiodic_environment(eta: float, length: int, entry: float = 0.5) -> WalkEnvironment:
    """w_k = sin^2(k eta)/2 exactly."""
    k = np.arange(length)
    return WalkEnvironment(kind=KIND_QUASIPERIODIC, w=0.5 * np.sin(k * eta) ** 2,
                           entry=entry, eta=eta)


def random_environment(length: int, seed: int, entry: float | None = None) -> WalkEnvironment:
    """w_k i.i.d. with density 2 / (pi sqrt(2w(1-2w))) on [0, 1/2).

    Sampled by inverse CDF: w = sin^2(pi u / 2)/2 for uniform u.  The stream
    is a counter-based Philox generator keyed by ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    w = 0.5 * np.sin(0.5 * math.pi * rng.random(length)) ** 2
    return WalkEnvironment(kind=KIND_RANDOM_IID, w=w,
                           entry=float(w[0]) if entry is None else entry)


def uniform_environment(length: int, w: float = 0.25) -> WalkEnvironment:
    return WalkEnvironment(kind=KIND_UNIFORM_QUARTER,
                           w=np.full(length, float(w)), entry=float(w))


def classical_propagate(env: WalkEnvironment, steps: int, p0: np.ndarray | None = None) -> np.ndarray:
    """Exact forward iteration of the lazy-walk master equation.

    Probability is conserved identically; plain double precision (tails
    below ~1e-308 underflow to zero, which large-deviation work should
    avoid by using ``walk_g_profile`` instead).
    """
    if steps < 0:
        raise ValidationError("steps", f"must be >= 0, got {steps}")
    r = env.hop_right()
    l = env.hop_left()
    s = env.stay()
    if p0 is None:
        p = np.zeros(env.length)
        p[0] = 1.0
    else:
        p = np.asarray(p0, dtype=float).copy()
    for _ in range(steps):
        nxt = s * p
        nxt[1:] += r[:-1] * p[:-1]
        nxt[:-1] += l[1:] * p[1:]
        p = nxt
    return p


def walk_msd(env: WalkEnvironment, checkpoints) -> np.ndarray:
    """<k^2> under exact propagation at the requested times (sorted)."""
    checkpoints = sorted(int(t) for t in checkpoints)
    k2 = np.arange(env.length, dtype=float) ** 2
    out = []
    p = np.zeros(env.length)
    p[0] = 1.0
    t = 0
    for target in checkpoints:
        p = classical_propagate(env, target - t, p0=p)
        t = target
        if p[-5:].sum() > 1e-8:
            raise NumericalError(
                f"walker reached the far boundary (length {env.length} too small for t={target})")
        out.append(float(np.dot(k2, p)))
    return np.asarray(out)


def environment_chain(env: WalkEnvironment) -> TransferChain:
    """View the walk as a transfer chain so log-space propagation applies."""
    r = env.hop_right()
    l = env.hop_left()
    s = env.stay()
    with np.errstate(divide="ignore"):
        log_diag = np.log(s)
        log_up = np.log(r[:-1])
        log_down = np.log(l[1:])
    n = env.length - 1
    return TransferChain(n=n, log_diag=log_diag, log_up=log_up, log_down=log_down,
                         log_post=np.zeros(n + 1), gamma=0.0, gauge="environment")


def walk_g_profile(env: WalkEnvironment, steps: int):
    """Large-deviation profile g(xi) = -(1/steps) log p(xi * steps, steps).

    Computed in log space, so it resolves probabilities far below double
    underflow.  Returns (xi, g); unreachable sites carry g = +inf.
    """
    chain = environment_chain(env)
    f, flog = transfer_propagate(chain, steps)
    logp = scaled.log_abs(f, flog)
    k = np.arange(env.length)
    with np.errstate(invalid="ignore"):
        g = np.where(logp > NEG_INF, -logp / steps, np.inf)
    return k / steps, g


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    """Empirical distribution of the lazy walk with binomial standard errors."""

    p_hat: np.ndarray
    stderr: np.ndarray
    n_traj: int
    seed: int
    msd: dict


def monte_carlo_walk(env: WalkEnvironment, steps: int, n_traj: int, seed: int,
                     checkpoints=()) -> MonteCarloResult:
    """Sample ``n_traj`` independent walkers for ``steps`` ticks.

    Uses a Philox counter-based stream keyed by ``seed``; one uniform drives
    each (walker, tick) so runs are bit-reproducible.
    """
    if n_traj < 1:
        raise ValidationError("n_traj", f"must be >= 1, got {n_traj}")
    rng = np.random.Generator(np.random.Philox(seed))
    r = env.hop_right()
    l = env.hop_left()
    pos = np.zeros(n_traj, dtype=np.int64)
    msd = {}
    marks = set(int(t) for t in checkpoints)
    for t in range(1, steps + 1):
        u = rng.random(n_traj)
        r_here = r[pos]
        l_here = l[pos]
        pos = pos + (u < r_here) - ((u >= r_here) & (u < r_here + l_here))
        if t in marks:
            msd[t] = float(np.mean(pos.astype(float) ** 2))
    counts = np.bincount(pos, minlength=env.length).astype(float)
    p_hat = counts / n_traj
    stderr = np.sqrt(np.maximum(p_hat * (1 - p_hat), 0.0) / n_traj)
    return MonteCarloResult(p_hat=p_hat, stderr=stderr, n_traj=n_traj, seed=seed, msd=msd)


# ---------------------------------------------------------------------------
# probability-conserving gauge

def stochastic_gauge(coeffs: MpsCoefficients, n: int | None = None) -> TransferChain:
    """Rescale the transfer weights into a bona fide transition matrix.

    A constant 1/C^2 = 1 + sup|a|^2 + sup|b|^2 plus a diagonal gauge fixes
    every row sum |a_k|^2 + |b_{k-1}|^2 + |c_k|^2 to 1 for k < n; the ratio
    recursion stays > 1 by construction, so the weights remain positive.
    Post-selection weights are transformed along, and ``log_c2`` records the
    C^2 rescale so partition-function ratios remain physical.
    """
    n = coeffs.n if n is None else n
    base = build_transfer_chain(coeffs, n)
    la2, lb2, lc2 = base.log_diag, base.log_down, base.log_up
    log_inv_c2 = scaled.logsumexp(np.array([0.0, np.max(la2), np.max(lb2)]))
    log_rho = np.zeros(n)
    for k in range(n):
        # x_k = 1/C^2 - |a_k|^2 - |b_{k-1}|^2 / rho_{k-1}, in scaled reals
        v, lg = scaled.sadd(1.0, log_inv_c2, -1.0, la2[k])
        if k >= 1:
            v, lg = scaled.sadd(v, lg, -1.0, lb2[k - 1] - log_rho[k - 1])
        if v <= 0:
            raise GaugeError(f"stochasticity ratio became non-positive at k={k}; "
                             "the bound constant C is too small")
        log_rho[k] = math.log(v) + lg - lc2[k]
    log_c2 = -log_inv_c2
    log_v2 = np.concatenate([[0.0], np.cumsum(log_rho)])  # log |v_k|^2
    return TransferChain(
        n=n,
        log_diag=la2 + log_c2,
        log_up=lc2 + log_rho + log_c2,
        log_down=lb2 - log_rho + log_c2,
        log_post=base.log_post - log_v2,
        gamma=coeffs.gamma,
        log_c2=log_c2,
        gauge="stochastic",
    )


# ---------------------------------------------------------------------------
# free energy

@dataclass(frozen=True, eq=False)
class FreeEnergyProfile:
    """F(xi) = g(xi) + h(xi) on the reduced coordinate grid xi = k/N.

    g is the drive-independent walk potential -(1/N) log <0|T^N|k>, h the
    drive field -(1/N) log |alpha_k|^2.  Unreachable points carry +inf.
    """

    n: int
    xi: np.ndarray
    g: np.ndarray
    h: np.ndarray
    F: np.ndarray
    xi_star: float


def free_energy(coeffs: MpsCoefficients, n: int | None = None) -> FreeEnergyProfile:
    chain = build_transfer_chain(coeffs, n)
    n = chain.n
    f, flog = transfer_propagate(chain, n)
    logf = scaled.log_abs(f, flog)
    xi = np.arange(n + 1) / n
    with np.errstate(invalid="ignore"):
        g = np.where(logf > NEG_INF, -logf / n, np.inf)
        h = np.where(chain.log_post > NEG_INF, -chain.log_post / n, np.inf)
    F = g + h
    finite = np.isfinite(F)
    if not np.any(finite):
        raise NumericalError("free energy is +inf everywhere")
    xi_star = float(xi[finite][np.argmin(F[finite])])
    return FreeEnergyProfile(n=n, xi=xi, g=g, h=h, F=F, xi_star=xi_star)


def profile_magnetization(profile: FreeEnergyProfile) -> float:
    """-sum xi e^{-N F} / sum e^{-N F}; equals the transfer-matrix route."""
    logw = np.where(np.isfinite(profile.F), -profile.n * profile.F, NEG_INF)
    m = np.max(logw)
    w = np.exp(logw - m)
    return -float(np.dot(profile.xi, w) / w.sum())


def analytic_field(xi, omega: float, omega_c: float) -> np.ndarray:
    """Thermodynamic-limit drive field: 0 above the transition, -2 theta xi below."""
    xi = np.asarray(xi, dtype=float)
    if omega >= omega_c:
        return np.zeros_like(xi)
    theta = math.acosh(omega_c / omega)
    return -2.0 * theta * xi


def condensation_ratio(coeffs: MpsCoefficients, n: int | None = None) -> float:
    """Q = sum_{k>0} f(k)|alpha_k|^2 / (f(0)|alpha_0|^2).

    The O(1) occupation of the polarized configuration distorts critical
    fits when Q is not >> 1; fit windows should require e.g. Q >= 10.
    """
    chain = build_transfer_chain(coeffs, n)
    f, flog = transfer_propagate(chain, chain.n)
    logs = scaled.log_abs(f, flog) + chain.log_post
    bulk = scaled.logsumexp(logs[1:])
    if logs[0] == NEG_INF:
        return math.inf
    return math.exp(bulk - logs[0]) if bulk - logs[0] < 700 else math.inf


def condensation_magnetization(profile: FreeEnergyProfile, gamma: float, n: int) -> float:
    """Weak-dissipation magnetization with the polarized-configuration term.

    Evaluates m = -gamma^2 S_1 / (1 + gamma^2 S_0) with S_j the bond-lattice
    sums sum_{k>0} xi^j e^{-n F(xi_k)} on a length-n chain, by quadrature on
    the profile grid (log-space, so arbitrarily large n is fine).  In the
    gamma -> infinity limit this reduces to the plain ratio -S_1/S_0.
    """
    xi = profile.xi[1:]
    F = profile.F[1:]
    ok = np.isfinite(F)
    if not np.any(ok):
        raise NumericalError("free-energy profile has no reachable interior points")
    # sum over the n+1 bond sites ~ n * integral dxi
    dxi = np.gradient(xi)[ok]
    logw = -n * F[ok] + np.log(n * dxi)
    m = np.max(logw)
    s0 = float(np.exp(logw - m).sum())
    s1 = float((xi[ok] * np.exp(logw - m)).sum())
    log_s0 = m + math.log(s0)
    log_s1 = m + math.log(s1)
    log_q = 2.0 * math.log(gamma) + log_s0
    # log(1 + e^log_q), stable for both signs
    softplus = log_q + math.log1p(math.exp(-log_q)) if log_q > 0 else math.log1p(math.exp(log_q))
    return -math.exp(2.0 * math.log(gamma) + log_s1 - softplus)


# ---------------------------------------------------------------------------
# critical-behavior fits

@dataclass(frozen=True)
class ScalingFit:
    """Result of the finite-size analysis near the drive transition."""

    a: float
    b: float
    beta: float
    omega_c_est: float
    fit_window: tuple
    residual: float
    a_err: float = 0.0
    b_err: float = 0.0


def susceptibility_crossing(omegas, chi_rows, ref: float | None = None):
    """Crossing point of susceptibility curves for different sizes.

    For every pair of sizes the sign change of the difference curve nearest
    ``ref`` (grid center if None) is located by linear interpolation; the
    estimates are averaged.  Raises if any pair fails to bracket a crossing.
    """
    omegas = np.asarray(omegas, dtype=float)
    chi_rows = [np.asarray(c, dtype=float) for c in chi_rows]
    if len(chi_rows) < 2:
        raise ValidationError("chi_rows", "need at least two sizes")
    center = ref if ref is not None else 0.5 * (omegas[0] + omegas[-1])
    crossings = []
    for i in range(len(chi_rows)):
        for j in range(i + 1, len(chi_rows)):
            d = chi_rows[i] - chi_rows[j]
            sign_flips = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
            if len(sign_flips) == 0:
                raise NumericalError(
                    f"no susceptibility crossing bracketed for size pair ({i},{j}); "
                    f"difference range [{d.min():.3e}, {d.max():.3e}] over "
                    f"omega in [{omegas[0]}, {omegas[-1]}]")
            roots = []
            for k in sign_flips:
                t = d[k] / (d[k] - d[k + 1])
                roots.append(omegas[k] + t * (omegas[k + 1] - omegas[k]))
            roots = np.asarray(roots)
            crossings.append(float(roots[np.argmin(np.abs(roots - center))]))
    return float(np.mean(crossings)), crossings


def _collapse_residual(a: float, b: float, sizes, delta_rows, m_rows,
                       x_max: float, n_knots: int) -> float:
    xs, ys = [], []
    for n, deltas, ms in zip(sizes, delta_rows, m_rows):
        x = np.asarray(deltas) * n**b
        y = np.asarray(ms) * n**a
        keep = np.abs(x) <= x_max
        xs.append(x[keep])
        ys.append(y[keep])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if len(x) < 3 * n_knots:
        return math.inf
    order = np.argsort(x)
    x, y = x[order], y[order]
    edges = np.linspace(0, len(x), n_knots + 1).astype(int)
    kx, ky = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            kx.append(x[lo:hi].mean())
            ky.append(y[lo:hi].mean())
    kx = np.asarray(kx)
    ky = np.asarray(ky)
    keep = np.concatenate([[True], np.diff(kx) > 1e-12])
    try:
        curve = PchipInterpolator(kx[keep], ky[keep])
    except ValueError:
        return math.inf
    resid = y - curve(np.clip(x, kx[keep][0], kx[keep][-1]))
    var = np.var(y)
    if var == 0:
        return math.inf
    return float(np.sum(resid**2) / (len(y) * var))


def collapse_exponents(sizes, delta_rows, m_rows, x_max: float = 3.0, n_knots: int = 12,
                       b_bounds=(0.4, 1.2), a_fixed: float | None = None):
    """Exponents (a, b) collapsing N^a m against delta N^b.

    The collapse objective (squared deviation from a monotone cubic through
    binned means of the pooled points, normalized by their variance) has a
    flat valley along beta = a/b, so a joint 2-D search is ill conditioned.
    Instead ``a`` is pinned first by the amplitude decay at the critical
    point, |m(delta=0, N)| ~ N^-a, read off the same curves; ``b`` then
    minimizes the collapse objective by grid search plus local refinement.
    """
    if len(sizes) < 3:
        raise ValidationError("sizes", "collapse fit needs at least 3 system sizes")
    if a_fixed is None:
        m0 = []
        for deltas, ms in zip(delta_rows, m_rows):
            order = np.argsort(np.asarray(deltas))
            m0.append(abs(float(np.interp(0.0, np.asarray(deltas)[order],
                                          np.asarray(ms)[order]))))
        if np.any(np.asarray(m0) <= 0):
            raise NumericalError("magnetization vanishes at the crossing; cannot pin a")
        a = -float(np.polyfit(np.log(sizes), np.log(m0), 1)[0])
    else:
        a = float(a_fixed)
    bs = np.arange(b_bounds[0], b_bounds[1] + 1e-12, 0.005)
    rs = np.array([_collapse_residual(a, b, sizes, delta_rows, m_rows, x_max, n_knots)
                   for b in bs])
    if not np.any(np.isfinite(rs)):
        raise NumericalError("collapse objective was infinite everywhere")
    i = int(np.argmin(rs))
    res = minimize(lambda bb: _collapse_residual(a, bb[0], sizes, delta_rows, m_rows,
                                                 x_max, n_knots),
                   x0=np.array([bs[i]]), method="Nelder-Mead",
                   options={"xatol": 1e-5, "fatol": 1e-14, "maxiter": 200})
    b, resid = (float(res.x[0]), float(res.fun)) if res.fun <= rs[i] else (float(bs[i]), float(rs[i]))
    return a, b, resid


def power_law_exponent(deltas, values, window) -> float:
    """Slope of log|values| vs log(delta) restricted to the window (lo, hi)."""
    deltas = np.asarray(deltas, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    lo, hi = window
    keep = (deltas >= lo) & (deltas <= hi) & (values > 0)
    if keep.sum() < 3:
        raise ValidationError("window", f"power-law window [{lo}, {hi}] keeps "
                              f"{int(keep.sum())} points; need >= 3")
    slope, _ = np.polyfit(np.log(deltas[keep]), np.log(values[keep]), 1)
    return float(slope)


def fit_critical(sizes, omegas, m_rows, chi_rows, gamma: float,
                 omega_c_ref: float | None = None,
                 power_window: tuple | None = None,
                 x_max: float = 3.0,
                 jackknife: bool = True) -> ScalingFit:
    """Full critical analysis: crossing estimate, collapse, and beta.

    For gamma/J <= 0.1 the exponent comes from a direct power-law fit of
    |m| vs delta on the largest size over ``power_window`` (which must avoid
    the condensation region); otherwise from the (a, b) collapse with
    beta = a/b.  Uncertainties are the spread over collapse-window variants.
    """
    if len(sizes) < 3:
        raise ValidationError("sizes", "need at least 3 system sizes")
    omega_c_est, _ = susceptibility_crossing(omegas, chi_rows, ref=omega_c_ref)
    deltas = [(omega_c_est - np.asarray(omegas)) / omega_c_est for _ in sizes]
    a, b, resid = collapse_exponents(sizes, deltas, m_rows, x_max=x_max)
    a_err = b_err = 0.0
    if jackknife:
        variants = []
        for fac in (0.75, 1.0, 1.25):
            try:
                va, vb, _ = collapse_exponents(sizes, deltas, m_rows, x_max=fac * x_max)
                variants.append((va, vb))
            except (NumericalError, ValidationError):
                continue
        if len(variants) >= 2:
            arr = np.asarray(variants)
            a_err = float(arr[:, 0].std(ddof=1))
            b_err = float(arr[:, 1].std(ddof=1))
    if gamma <= 0.1:
        if power_window is None:
            raise ValidationError("power_window",
                                  "weak-dissipation fit needs an explicit delta window")
        i_big = int(np.argmax(sizes))
        beta = power_law_exponent(deltas[i_big], m_rows[i_big], power_window)
        window = tuple(power_window)
    else:
        beta = a / b
        window = (-x_max, x_max)
    return ScalingFit(a=a, b=b, beta=beta, omega_c_est=omega_c_est,
                      fit_window=window, residual=resid, a_err=a_err, b_err=b_err)
