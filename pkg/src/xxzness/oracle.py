"""Brute-force Lindblad ground truth for small chains.

Builds the vectorized generator as a dense matrix (row-major vec, so
vec(A rho B) = (A (x) B^T) vec(rho)), extracts the steady state from its
kernel, integrates two-time correlators with the regression theorem, and
constructs the operator pair whose correlators obey Onsager symmetry.

Site ordering: site 1 is the leftmost (most significant) tensor factor.
Doubled variants interleave chain and mirror as A1, B1, A2, B2, ....
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import (CapacityError, DegenerateDriveError, NumericalError,
                     ValidationError)
from .model import ModelParams

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SPLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |up><down|
SMINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |down><up|
ID2 = np.eye(2, dtype=complex)

VARIANT_COHERENT = "coherent_drive"
VARIANT_INCOHERENT = "incoherent_pump_loss"
VARIANT_DOUBLED_COHERENT = "doubled_coherent"
VARIANT_DOUBLED_INCOHERENT = "doubled_incoherent"
VARIANT_THERMAL = "thermal_coherent"
VARIANTS = (VARIANT_COHERENT, VARIANT_INCOHERENT, VARIANT_DOUBLED_COHERENT,
            VARIANT_DOUBLED_INCOHERENT, VARIANT_THERMAL)

MAX_SINGLE_N = 5
MAX_DOUBLED_N = 3


def site_operator(op, site: int, nspins: int) -> sp.csr_matrix:
    """Embed a single-spin operator at 1-based ``site`` (sparse kron chain)."""
    left = sp.identity(2 ** (site - 1), format="csr", dtype=complex)
    right = sp.identity(2 ** (nspins - site), format="csr", dtype=complex)
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def xxz_hamiltonian(n: int, J: float, delta: float, site=None, nspins: int | None = None) -> sp.csr_matrix:
    """Exchange-form XXZ chain: sum_j J (sp sm + sm sp) + (Delta/2) sz sz.

    This normalization is what makes the exact solution's recursions, the
    critical drive sqrt(J^2 - Delta^2), and the Onsager operator identity
    hold with their stated constants; Delta = J is the isotropic point.
    """
    site = site or (lambda i: i)
    ns = nspins or n
    dim = 2**ns
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(1, n):
        H = H + J * (site_operator(SPLUS, site(j), ns) @ site_operator(SMINUS, site(j + 1), ns)
                     + site_operator(SMINUS, site(j), ns) @ site_operator(SPLUS, site(j + 1), ns))
        H = H + 0.5 * delta * (site_operator(SZ, site(j), ns) @ site_operator(SZ, site(j + 1), ns))
    return H


def doubled_operators(params: ModelParams, variant: str):
    """(H, [(L, rate), ...]) for the chain + mirror cascade, sparse.

    The mirror carries -H; the chiral link contributes the exchange term
    -(i gamma/2)(sp_A1 sm_B1 - h.c.) and the collective jump sm_A1 - sm_B1.
    The incoherent variant adds the mirrored link at site N with the
    collective raising jump.
    """
    n = params.n
    ns = 2 * n
    A = lambda i: 2 * i - 1
    B = lambda i: 2 * i
    J, delta, omega, gamma = params.J, params.delta, params.omega, params.gamma
    H = xxz_hamiltonian(n, J, delta, site=A, nspins=ns) \
        - xxz_hamiltonian(n, J, delta, site=B, nspins=ns)
    link1 = -0.5j * gamma * (site_operator(SPLUS, A(1), ns) @ site_operator(SMINUS, B(1), ns)
                             - site_operator(SMINUS, A(1), ns) @ site_operator(SPLUS, B(1), ns))
    H = H + link1
    jump1 = site_operator(SMINUS, A(1), ns) - site_operator(SMINUS, B(1), ns)
    if variant == VARIANT_DOUBLED_COHERENT:
        H = H + 0.5 * omega * (site_operator(SX, A(n), ns) - site_operator(SX, B(n), ns))
        return H, [(jump1, gamma)]
    if variant == VARIANT_DOUBLED_INCOHERENT:
        linkN = -0.5j * gamma * (site_operator(SMINUS, A(n), ns) @ site_operator(SPLUS, B(n), ns)
                                 - site_operator(SPLUS, A(n), ns) @ site_operator(SMINUS, B(n), ns))
        H = H + linkN
        jumpN = site_operator(SPLUS, A(n), ns) - site_operator(SPLUS, B(n), ns)
        return H, [(jump1, gamma), (jumpN, gamma)]
    raise ValidationError("variant", f"not a doubled variant: {variant}")


@dataclass(frozen=True, eq=False)
class DenseLindblad:
    """Vectorized generator (sparse storage) plus the operators that built it.

    ``superop`` acts on row-major vec(rho); it is kept sparse because the
    doubled variants reach dimension 16^n, but it densifies exactly via
    ``superop_dense`` for the small single-chain cases.
    """

    nspins: int
    dim: int
    variant: str
    superop: sp.csr_matrix
    hamiltonian: np.ndarray
    jumps: list

    def superop_dense(self) -> np.ndarray:
        return np.asarray(self.superop.todense())

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.superop @ rho.reshape(-1)).reshape(self.dim, self.dim)


def _assemble_superop(H: sp.spmatrix, jumps) -> sp.csr_matrix:
    d = H.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    H = sp.csr_matrix(H)
    L = -1j * (sp.kron(H, eye, format="csr") - sp.kron(eye, H.T, format="csr"))
    for op, rate in jumps:
        op = sp.csr_matrix(op)
        ldl = sp.csr_matrix(op.conj().T @ op)
        L = L + rate * (sp.kron(op, op.conj(), format="csr")
                        - 0.5 * sp.kron(ldl, eye, format="csr")
                        - 0.5 * sp.kron(eye, ldl.T, format="csr"))
    return sp.csr_matrix(L)


def build_liouvillian(params: ModelParams, variant: str = VARIANT_COHERENT) -> DenseLindblad:
    """Dense superoperator for one of the model variants.

    Capacity: single-chain variants need n <= 5 (superoperator dim 4^n),
    doubled variants n <= 3 (dim 4^{2n}).
    """
    if variant not in VARIANTS:
        raise ValidationError("variant", f"unknown variant {variant!r}; options: {VARIANTS}")
    n = params.n
    if variant in (VARIANT_DOUBLED_COHERENT, VARIANT_DOUBLED_INCOHERENT):
        if params.n_th != 0:
            raise ValidationError("n_th", "doubled variants are zero-temperature constructions")
        if n > MAX_DOUBLED_N:
            raise CapacityError("n", f"doubled superoperator dim is 16^n; n = {n} > {MAX_DOUBLED_N}")
        H, jumps = doubled_operators(params, variant)
        nspins = 2 * n
    else:
        if n > MAX_SINGLE_N:
            raise CapacityError("n", f"superoperator dim is 4^n; n = {n} > {MAX_SINGLE_N}")
        nspins = n
        if variant == VARIANT_COHERENT:
            params.require_zero_temperature()
            H = xxz_hamiltonian(n, params.J, params.delta) \
                + 0.5 * params.omega * site_operator(SX, n, n)
            jumps = [(site_operator(SMINUS, 1, n), params.gamma)]
        elif variant == VARIANT_INCOHERENT:
            params.require_zero_temperature()
            H = xxz_hamiltonian(n, params.J, params.delta)
            jumps = [(site_operator(SMINUS, 1, n), params.gamma),
                     (site_operator(SPLUS, n, n), params.gamma)]
        else:  # thermal bath on site 1, coherent drive on site N
            H = xxz_hamiltonian(n, params.J, params.delta) \
                + 0.5 * params.omega * site_operator(SX, n, n)
            jumps = [(site_operator(SMINUS, 1, n), (1.0 + params.n_th) * params.gamma),
                     (site_operator(SPLUS, 1, n), params.n_th * params.gamma)]
    superop = _assemble_superop(H, jumps)
    Hd = np.asarray(H.todense())
    jumps_dense = [(np.asarray(op.todense()), rate) for op, rate in jumps]
    return DenseLindblad(nspins=nspins, dim=2**nspins, variant=variant,
                         superop=superop, hamiltonian=Hd, jumps=jumps_dense)


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Kernel state of the generator plus the spectral gap diagnostic."""

    rho: np.ndarray
    gap: float


def steady_state(lind: DenseLindblad, degeneracy_tol: float = 1e-10) -> SteadyState:
    """Steady state from the full eigendecomposition of the superoperator.

    Raises if the kernel is (numerically) more than one dimensional, which
    happens at Omega = 0 where the polarized state is reached only
    asymptotically in a rank-deficient way.
    """
    w, v = la.eig(lind.superop)
    order = np.argsort(np.abs(w))
    if np.abs(w[order[1]]) <= degeneracy_tol:
        raise DegenerateDriveError(
            f"steady state is degenerate: two eigenvalues within {degeneracy_tol} of zero "
            f"(|lambda| = {np.abs(w[order[0]]):.2e}, {np.abs(w[order[1]]):.2e})")
    rho = v[:, order[0]].reshape(lind.dim, lind.dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho)
    if abs(tr) < 1e-300:
        raise NumericalError("kernel vector has zero trace")
    rho = rho / tr
    resid = np.linalg.norm(lind.superop @ rho.reshape(-1))
    if resid > 1e-8:
        raise NumericalError(f"steady-state residual {resid:.2e} exceeds 1e-8")
    gap = float(np.min(np.abs(w[order[1:]].real[np.abs(w[order[1:]]) > degeneracy_tol]))) \
        if lind.dim > 1 else 0.0
    return SteadyState(rho=rho, gap=gap)


def two_time_correlator(lind: DenseLindblad, rho_ss: np.ndarray, X: np.ndarray,
                        Y: np.ndarray, t_grid) -> np.ndarray:
    """<X(t) Y(0)> = Tr[X e^{Lt}(Y rho_ss)] on the given time grid.

    The propagated object Y rho_ss is not a state; the vectorized equation
    is integrated directly with a high-order adaptive scheme (tolerances
    1e-11 / 1e-13, comfortably below the 1e-8 symmetry checks).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ValidationError("t_grid", "need an increasing grid of non-negative times")
    y0 = (Y @ rho_ss).reshape(-1).astype(complex)
    superop = lind.superop

    def rhs(_t, y):
        return superop @ y

    t0, t1 = (0.0, float(t_grid[-1]))
    sol = solve_ivp(rhs, (t0, max(t1, 1e-12)), y0, t_eval=t_grid, method="DOP853",
                    rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise NumericalError(f"correlator integration failed: {sol.message}")
    xt = X.reshape(-1)
    d = lind.dim
    out = np.empty(len(t_grid), dtype=complex)
    for i in range(sol.y.shape[1]):
        out[i] = np.trace(X @ sol.y[:, i].reshape(d, d))
    return out


def onsager_operator_pair(params: ModelParams):
    """The certified time-symmetric pair (X, Y) = (sm_1, sm_1 sm_2).

    Verifies the construction: with H_eff = H_XXZ + (Omega/2) sx_N
    + (i gamma/2) sp_1 sm_1, the nested commutator -[[H_eff, sm_1], sm_1]/2
    equals sm_1 H_eff sm_1 = J sm_1 sm_2 as an exact matrix identity.
    """
    n = params.n
    if n > MAX_SINGLE_N:
        raise CapacityError("n", f"dense operators need n <= {MAX_SINGLE_N}")
    Heff = (xxz_hamiltonian(n, params.J, params.delta)
            + 0.5 * params.omega * site_operator(SX, n, n)
            + 0.5j * params.gamma * (site_operator(SPLUS, 1, n) @ site_operator(SMINUS, 1, n)))
    Heff = np.asarray(Heff.todense())
    s1 = np.asarray(site_operator(SMINUS, 1, n).todense())
    s2 = np.asarray(site_operator(SMINUS, 2, n).todense())
    comm = Heff @ s1 - s1 @ Heff
    nested = -0.5 * ((comm @ s1) - (s1 @ comm))
    target = params.J * (s1 @ s2)
    if np.max(np.abs(nested - target)) > 1e-12:
        raise NumericalError("nested-commutator identity violated; operator construction bug")
    return s1, s1 @ s2


# ---------------------------------------------------------------------------
# density-matrix utilities

def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(la.eigvalsh(rho - sigma))))


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)


def partial_trace_mirror(psi_spin: np.ndarray, n: int) -> np.ndarray:
    """Trace the mirror chain out of a doubled pure state (A1,B1,A2,B2,... order)."""
    t = psi_spin.reshape((2,) * (2 * n))
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    m = np.transpose(t, perm).reshape(2**n, 2**n)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real
