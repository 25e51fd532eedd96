"""Measured relative entropies and restricted distinguishability measures.

The unrestricted measured relative entropy is solved through its variational
form  sup_{w > 0} tr[rho log w] - log tr[sigma w],  reduced to a concave
program over density matrices; locally restricted classes (LO, one-way LOCC)
use alternating maximization over structured POVMs; SEPP/PPT cone
relaxations give upper bounds.  Every lower-direction value is reported as
the Born-rule KL of an explicit witness measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize, minimize_scalar

from .linop import (
    DomainError, LabeledOperator, LayoutError, ParameterError, QuantumState,
    SystemLayout, SUPPORT_RTOL, cluster_eigenvalues, dd_kernel,
    log_frechet_adjoint, permute, rng_for,
    _as_labels,
)
from .parallel import indexed_map

DEFAULT_RESTARTS = 20
FW_GAP_TOL = 1e-8
FW_ITER_CAP = 5000


def _op(x) -> LabeledOperator:
    return x.op if isinstance(x, QuantumState) else x


def kl(p, q) -> float:
    """Classical relative entropy in nats; +inf on support violation."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ParameterError("pmf length mismatch")
    if p.min() < -1e-12 or q.min() < -1e-12:
        raise ParameterError("pmf entries must be nonnegative")
    if abs(p.sum() - 1) > 1e-9 or abs(q.sum() - 1) > 1e-9:
        raise ParameterError("pmfs must sum to one")
    mask = p > 1e-15
    if np.any(q[mask] <= 1e-300):
        return math.inf
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


def _kl_raw(p, q) -> float:
    mask = p > 1e-15
    q = np.clip(q, 1e-300, None)
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


@dataclass
class Measurement:
    """A POVM with structural tags matching its measurement class."""

    class_tag: str
    elements: list
    layout: SystemLayout
    structure: dict = field(default_factory=dict)

    def check(self, tol: float = 1e-10) -> None:
        total = sum(self.elements)
        if np.abs(total - np.eye(self.layout.dim)).max() > tol:
            raise DomainError("POVM elements do not sum to the identity")
        for m in self.elements:
            if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -tol:
                raise DomainError("POVM element is not PSD")

    def born(self, x) -> np.ndarray:
        m = _op(x).entries
        return np.real(np.einsum("zij,ji->z", np.asarray(self.elements), m))


@dataclass
class ConeElement:
    """A PSD operator inside a measurement-class cone, with its certificate."""

    cone_tag: str
    operator: np.ndarray
    layout: SystemLayout
    certificate: dict = field(default_factory=dict)


@dataclass
class MeasuredValue:
    value: float
    bound_direction: str  # "exact" | "lower" | "upper"
    witness: object = None
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def _inv_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    mask = w > SUPPORT_RTOL * max(w.max(), 1e-300)
    f = np.where(mask, 1.0 / np.sqrt(np.clip(w, 1e-300, None)), 0.0)
    return (v * f) @ v.conj().T


def _logm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    mask = w > SUPPORT_RTOL * max(w.max(), 1e-300)
    lw = np.where(mask, np.log(np.clip(w, 1e-300, None)), 0.0)
    return (v * lw) @ v.conj().T


def fidelity(a, b) -> float:
    """F(a, b) = || sqrt(a) sqrt(b) ||_1^2 (squared-overlap convention)."""
    s = np.linalg.svd(_psd_sqrt(_op(a).entries) @ _psd_sqrt(_op(b).entries),
                      compute_uv=False)
    return float(s.sum() ** 2)


def trace_norm(a) -> float:
    m = _op(a).entries if isinstance(a, (LabeledOperator, QuantumState)) else np.asarray(a)
    return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())


def _support_violation(rho: np.ndarray, sigma: np.ndarray) -> bool:
    w, v = np.linalg.eigh(sigma)
    mask = w > SUPPORT_RTOL * max(w.max(), 1e-300)
    outside = v[:, ~mask]
    if not outside.shape[1]:
        return False
    leak = float(np.real(np.einsum("ij,ik,kj->", outside.conj(), rho, outside)))
    return leak > 1e-12


def _restrict_to_support(rho: np.ndarray, sigma: np.ndarray):
    """Compress both operators onto supp(sigma); returns (r, s, isometry)."""
    w, v = np.linalg.eigh(sigma)
    mask = w > SUPPORT_RTOL * max(w.max(), 1e-300)
    iso = v[:, mask]
    return iso.conj().T @ rho @ iso, iso.conj().T @ sigma @ iso, iso


def _basis_pmfs(rho, sigma, V):
    p = np.clip(np.real(np.einsum("id,de,ei->i", V.conj().T, rho, V)), 0.0, None)
    q = np.clip(np.real(np.einsum("id,de,ei->i", V.conj().T, sigma, V)), 0.0, None)
    return p, q


# ---------------------------------------------------------------------------
# Unrestricted measured relative entropy

def _dall_objective(rho, msig, tau):
    """Value and gradient of tau -> tr[rho log(msig tau msig)]."""
    omega = msig @ tau @ msig
    lam, V = np.linalg.eigh((omega + omega.conj().T) / 2)
    lam = np.clip(lam, 1e-300, None)
    logw = np.log(lam)
    f = float(np.real(np.einsum("id,de,ei,i->", V.conj().T, rho, V, logw)))
    K = dd_kernel(lam, logw, 1.0 / lam)
    G = msig @ (V @ (K * (V.conj().T @ rho @ V)) @ V.conj().T) @ msig
    return f, (G + G.conj().T) / 2


def _rebuild_tau(rho, sigma, ssqrt, V):
    """Optimal scaled likelihood-ratio iterate for a fixed eigenbasis."""
    p, q = _basis_pmfs(rho, sigma, V)
    ratio = np.clip(p, 1e-300, None) / np.clip(q, 1e-300, None)
    ohat = (V * ratio) @ V.conj().T
    tau = ssqrt @ ohat @ ssqrt
    tau = (tau + tau.conj().T) / 2
    return tau / max(np.real(np.trace(tau)), 1e-300)


def d_all(rho, sigma, gap_tol: float = FW_GAP_TOL, max_iter: int = 500,
          polish_iters: int = 60, extra_bases=None) -> MeasuredValue:
    """Measured relative entropy over all POVMs via its variational form.

    The concave program  sup tr[rho log w] - log tr[sigma w]  is reduced to
    densities tau via w = sigma^{-1/2} tau sigma^{-1/2}, driven by L-BFGS on
    a factorization of tau, polished by conditional-gradient steps with exact
    line search, and certified by the Frank--Wolfe duality gap.  The reported
    value is the Born-rule KL of the projective measurement read off the
    optimizer's eigenbasis, so the witness re-evaluates to it exactly.
    """
    rho_op, sig_op = _op(rho), _op(sigma)
    if rho_op.layout != sig_op.layout:
        raise LayoutError("d_all requires matching layouts")
    r_full, s_full = rho_op.entries, sig_op.entries
    if _support_violation(r_full, s_full):
        return MeasuredValue(math.inf, "exact", diagnostics={"support_ok": False})
    r, s, iso = _restrict_to_support(r_full, s_full)
    d = r.shape[0]
    msig = _inv_sqrt(s)
    ssqrt = _psd_sqrt(s)

    # warm-start bases: the unmeasured optimizer's eigenbasis (lossless for
    # commuting pairs) and the reference eigenbasis
    cands = [np.linalg.eigh(_logm_psd(r) - _logm_psd(s))[1],
             np.linalg.eigh(s)[1]]
    if extra_bases:
        cands.extend(iso.conj().T @ b for b in extra_bases)
    best_tau, best_f = None, -math.inf
    for V in cands:
        tau = _rebuild_tau(r, s, ssqrt, V)
        f, _ = _dall_objective(r, msig, tau)
        if f > best_f:
            best_tau, best_f = tau, f

    # L-BFGS on tau = LL^dag / tr(LL^dag); interior stationary points of the
    # concave objective are global optima
    L0 = np.linalg.cholesky(best_tau + 1e-12 * np.eye(d))
    x0 = np.concatenate([L0.real.ravel(), L0.imag.ravel()])

    def fg(x):
        L = x[:d * d].reshape(d, d) + 1j * x[d * d:].reshape(d, d)
        S = L @ L.conj().T
        n = max(np.real(np.trace(S)), 1e-300)
        tau = S / n
        f, G = _dall_objective(r, msig, tau)
        H = (G - np.real(np.trace(G @ tau)) * np.eye(d)) / n
        GL = 2 * (H @ L)
        return -f, -np.concatenate([GL.real.ravel(), GL.imag.ravel()])

    res = minimize(fg, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": 1e-18, "gtol": 1e-12})
    L = res.x[:d * d].reshape(d, d) + 1j * res.x[d * d:].reshape(d, d)
    tau = L @ L.conj().T
    tau /= max(np.real(np.trace(tau)), 1e-300)

    # conditional-gradient polish with duality-gap stopping
    f, G = _dall_objective(r, msig, tau)
    trace = [f]
    gap = math.inf
    for _ in range(polish_iters):
        tau = _rebuild_tau(r, s, ssqrt, np.linalg.eigh(msig @ tau @ msig)[1])
        f, G = _dall_objective(r, msig, tau)
        trace.append(f)
        wg, vg = np.linalg.eigh(G)
        gap = float(np.real(wg[-1] - np.trace(G @ tau)))
        if gap <= gap_tol:
            break
        vtop = vg[:, -1]
        cand = np.outer(vtop, vtop.conj())

        def neg(gamma):
            return -_dall_objective(r, msig, (1 - gamma) * tau + gamma * cand)[0]

        step = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded",
                               options={"xatol": 1e-13})
        tau = (1 - step.x) * tau + step.x * cand

    # read off the witness measurement; keep the best basis seen
    _, V = np.linalg.eigh(msig @ tau @ msig)
    best_val, best_basis = -math.inf, None
    for basis in [iso @ V] + [iso @ c for c in cands]:
        p, q = _basis_pmfs(r_full, s_full, basis)
        val = _kl_raw(p, q)
        if val > best_val:
            best_val, best_basis = val, basis
    elements = [np.outer(best_basis[:, i], best_basis[:, i].conj())
                for i in range(best_basis.shape[1])]
    comp = np.eye(rho_op.dim) - sum(elements)
    if np.abs(comp).max() > 1e-12:
        elements.append((comp + comp.conj().T) / 2)
    witness = Measurement("ALL", elements, rho_op.layout,
                          {"kind": "projective", "basis": best_basis})
    return MeasuredValue(best_val, "lower", witness,
                         {"gap": gap, "iterations": len(trace), "trace": trace,
                          "support_ok": True})


def d_pinch(rho, sigma, cluster_rtol: float = 1e-8) -> MeasuredValue:
    """KL of the reference-eigenbasis pinching measurement.

    Measures in the joint eigenbasis of (pinched rho, sigma); the value is
    sandwiched between D - log|spec sigma| and D.
    """
    rho_op, sig_op = _op(rho), _op(sigma)
    if rho_op.layout != sig_op.layout:
        raise LayoutError("d_pinch requires matching layouts")
    r, s = rho_op.entries, sig_op.entries
    if _support_violation(r, s):
        return MeasuredValue(math.inf, "exact", diagnostics={"support_ok": False})
    ws, vs = np.linalg.eigh(s)
    rt = vs.conj().T @ r @ vs
    basis = np.array(vs)
    for g in cluster_eigenvalues(ws, cluster_rtol):
        blk = rt[np.ix_(g, g)]
        _, u = np.linalg.eigh((blk + blk.conj().T) / 2)
        basis[:, g] = vs[:, g] @ u
    p, q = _basis_pmfs(r, s, basis)
    value = _kl_raw(p, q)
    elements = [np.outer(basis[:, i], basis[:, i].conj())
                for i in range(basis.shape[1])]
    witness = Measurement("ALL", elements, rho_op.layout,
                          {"kind": "pinching", "basis": basis})
    return MeasuredValue(value, "lower", witness,
                         {"distinct_spectrum": len(cluster_eigenvalues(ws, cluster_rtol)),
                          "support_ok": True})


# ---------------------------------------------------------------------------
# Structured POVM machinery (square-root parametrization)

def _bipartite(x, cut) -> tuple[np.ndarray, int, int]:
    op = _op(x)
    a, b = _as_labels(cut[0]), _as_labels(cut[1])
    ordered = permute(op, a + b)
    return ordered.entries, op.layout.dim_of(a), op.layout.dim_of(b)


def _povm_from_rows(L: np.ndarray) -> list:
    """Rank-1 POVM Q_x = S^{-1/2} l_x^dag l_x S^{-1/2} from unconstrained rows."""
    S = L.conj().T @ L
    W = _inv_sqrt(S + 1e-14 * max(np.trace(S).real, 1e-30) * np.eye(S.shape[0]))
    rows = L @ W
    return [np.outer(row.conj(), row) for row in rows]


def _povm_rows_gradient(L: np.ndarray, grads_q: list) -> np.ndarray:
    """Wirtinger gradient of an objective with per-effect gradients
    ``grads_q`` through the normalized square-root parametrization."""
    n, d = L.shape
    S = L.conj().T @ L
    S = S + 1e-14 * max(np.trace(S).real, 1e-30) * np.eye(d)
    w, U = np.linalg.eigh(S)
    w = np.clip(w, 1e-30, None)
    Kmat = dd_kernel(w, 1.0 / np.sqrt(w), -0.5 * w ** (-1.5))
    W = (U / np.sqrt(w)) @ U.conj().T
    K = np.zeros((d, d), dtype=complex)
    Ms = [np.outer(L[x].conj(), L[x]) for x in range(n)]
    for M, G in zip(Ms, grads_q):
        K += M @ W @ G + G @ W @ M
    T = U @ (Kmat * (U.conj().T @ K @ U)) @ U.conj().T
    T = (T + T.conj().T) / 2
    # Wirtinger derivative wrt conj(l_x): ascent step dl = out gives
    # df = 2 Re[out . conj(dl)] = 2 |out|^2 >= 0
    out = np.zeros_like(L)
    for x, G in enumerate(grads_q):
        A = T + W @ G @ W
        out[x] = L[x] @ A
    return out


class KLObjective:
    """sum p log(p/q), maximized."""

    maximize = True
    name = "kl"

    @staticmethod
    def phi(p, q):
        p = np.clip(p, 0.0, None)
        q = np.clip(q, 1e-300, None)
        out = np.zeros_like(p)
        m = p > 1e-15
        out[m] = p[m] * (np.log(p[m]) - np.log(q[m]))
        return out

    @staticmethod
    def dphi(p, q):
        p = np.clip(p, 1e-18, None)
        q = np.clip(q, 1e-18, None)
        return np.log(p / q) + 1.0, -p / q


class BhattacharyyaObjective:
    """sum sqrt(p q), minimized (restricted-fidelity estimates)."""

    maximize = False
    name = "bhattacharyya"

    @staticmethod
    def phi(p, q):
        return np.sqrt(np.clip(p, 0.0, None) * np.clip(q, 0.0, None))

    @staticmethod
    def dphi(p, q):
        p = np.clip(p, 1e-18, None)
        q = np.clip(q, 1e-18, None)
        root = np.sqrt(p * q)
        return 0.5 * root / p, 0.5 * root / q


class L1Objective:
    """sum |p - q|, maximized (restricted-norm estimates)."""

    maximize = True
    name = "l1"

    @staticmethod
    def phi(p, q):
        return np.abs(p - q)

    @staticmethod
    def dphi(p, q):
        s = np.sign(p - q)
        return s, -s


def _joint_pmfs(povm_a, cond_ops_rho, cond_ops_sig):
    p, q = [], []
    for x, Q in enumerate(povm_a):
        p.append(np.real(np.einsum("ij,zji->z", Q, np.asarray(cond_ops_rho[x]))))
        q.append(np.real(np.einsum("ij,zji->z", Q, np.asarray(cond_ops_sig[x]))))
    return p, q


def _ascend_rows(L, cond_ops_rho, cond_ops_sig, objective, steps=25,
                 eta0=0.3) -> np.ndarray:
    """Backtracking gradient ascent of a separable outcome objective over the
    POVM rows (gradient flipped when the objective is minimized)."""
    sign = 1.0 if objective.maximize else -1.0

    def value(Lc):
        povm = _povm_from_rows(Lc)
        p, q = _joint_pmfs(povm, cond_ops_rho, cond_ops_sig)
        return sign * float(sum(objective.phi(px, qx).sum() for px, qx in zip(p, q)))

    cond_r_stacks = [np.asarray(ops) for ops in cond_ops_rho]
    cond_s_stacks = [np.asarray(ops) for ops in cond_ops_sig]
    cur = value(L)
    eta = eta0
    for _ in range(steps):
        povm = _povm_from_rows(L)
        p, q = _joint_pmfs(povm, cond_ops_rho, cond_ops_sig)
        grads_q = []
        for x in range(len(povm)):
            dp, dq = objective.dphi(p[x], q[x])
            G = (np.tensordot(dp, cond_r_stacks[x], axes=1)
                 + np.tensordot(dq, cond_s_stacks[x], axes=1))
            grads_q.append(sign * (G + G.conj().T) / 2)
        dL = _povm_rows_gradient(L, grads_q)
        norm = np.linalg.norm(dL)
        if norm < 1e-12:
            break
        improved = False
        e = eta
        for _ in range(30):
            Lt = L + e * dL / norm
            vt = value(Lt)
            if vt > cur + 1e-15:
                L, cur = Lt, vt
                eta = min(e * 1.5, 2.0)
                improved = True
                break
            e *= 0.5
        if not improved:
            break
    return L


def _initial_rows(rng, n_out, d, kind) -> np.ndarray:
    if kind == "basis":
        L = np.zeros((n_out, d), dtype=complex)
        L[:d] = np.eye(d)
        if n_out > d:
            L[d:] = 0.05 * (rng.normal(size=(n_out - d, d))
                            + 1j * rng.normal(size=(n_out - d, d)))
        return L
    return rng.normal(size=(n_out, d)) + 1j * rng.normal(size=(n_out, d))


def _cond_contract(joint: np.ndarray, da: int, db: int, side_ops, on_a: bool):
    """tr_A[(Q (x) 1) M] per Q (``on_a``) or tr_B[(1 (x) P) M] per P."""
    t = joint.reshape(da, db, da, db)
    out = []
    for m in side_ops:
        if on_a:
            out.append(np.einsum("ab,aibj->ij", m.T, t))
        else:
            out.append(np.einsum("ij,aibj->ab", m.T, t))
    return out


def _cond_basis(objective, rx, sx):
    """Optimal conditional rank-1 basis for one measure-side outcome."""
    if isinstance(objective, type):
        objective = objective()
    if objective.name == "kl":
        tr_r = max(np.real(np.trace(rx)), 1e-18)
        tr_s = max(np.real(np.trace(sx)), 1e-18)
        sub = d_all(_wrap(rx / tr_r), _wrap(sx / tr_s),
                    gap_tol=1e-7, max_iter=200, polish_iters=20)
        return sub.witness.structure["basis"]
    if objective.name == "bhattacharyya":
        # Fuchs--Caves optimal basis: eigenbasis of the geometric-mean ratio
        si = _inv_sqrt(sx)
        mid = _psd_sqrt(_psd_sqrt(sx) @ rx @ _psd_sqrt(sx))
        m = si @ mid @ si
        _, v = np.linalg.eigh((m + m.conj().T) / 2)
        return v
    # l1: positive/negative eigenspaces of the difference
    _, v = np.linalg.eigh(((rx - sx) + (rx - sx).conj().T) / 2)
    return v


def _wrap(m: np.ndarray) -> LabeledOperator:
    return LabeledOperator(SystemLayout(("_",), (m.shape[0],)),
                           (m + m.conj().T) / 2, True)


def _conditional_value(objective, rho_m, sig_m, povm_a, cond_bases, da, db):
    total = 0.0
    for Q, basis in zip(povm_a, cond_bases):
        rx = _cond_contract(rho_m, da, db, [Q], True)[0]
        sx = _cond_contract(sig_m, da, db, [Q], True)[0]
        p, q = _basis_pmfs(rx, sx, basis)
        total += objective.phi(p, q).sum()
    return float(total)


def _structured_search(objective, rho_m, sig_m, da, db, restarts, seed, rounds,
                       tag, threads=1, extra_starts=None, locc1=True):
    """Shared multi-start alternation for LOCC1 (conditional bases) and LO
    (two unconditional POVMs).  Returns (value, witness pieces)."""
    obj = objective() if isinstance(objective, type) else objective
    n_out = da * da
    better = max if obj.maximize else min

    def one_locc1(i):
        rng = rng_for(seed, f"{tag}/{i}")
        if i == 0:
            L = _initial_rows(rng, n_out, da, "basis")
        elif extra_starts is not None and i - 1 < len(extra_starts):
            L = np.array(extra_starts[i - 1], dtype=complex)
        else:
            L = _initial_rows(rng, n_out, da, "random")
        best = None
        for _ in range(rounds):
            povm = _povm_from_rows(L)
            bases = []
            for Q in povm:
                rx = _cond_contract(rho_m, da, db, [Q], True)[0]
                sx = _cond_contract(sig_m, da, db, [Q], True)[0]
                bases.append(_cond_basis(obj, rx, sx))
            val = _conditional_value(obj, rho_m, sig_m, povm, bases, da, db)
            if best is None or better(val, best[0]) == val and abs(val - best[0]) > 1e-12:
                best = (val, povm, bases)
            else:
                break
            cond_r, cond_s = [], []
            for basis in bases:
                projs = [np.outer(basis[:, z], basis[:, z].conj())
                         for z in range(basis.shape[1])]
                cond_r.append(_cond_contract(rho_m, da, db, projs, False))
                cond_s.append(_cond_contract(sig_m, da, db, projs, False))
            L = _ascend_rows(L, cond_r, cond_s, obj)
        # re-evaluate at final rows too
        povm = _povm_from_rows(L)
        bases = []
        for Q in povm:
            rx = _cond_contract(rho_m, da, db, [Q], True)[0]
            sx = _cond_contract(sig_m, da, db, [Q], True)[0]
            bases.append(_cond_basis(obj, rx, sx))
        val = _conditional_value(obj, rho_m, sig_m, povm, bases, da, db)
        if better(val, best[0]) == val:
            best = (val, povm, bases)
        return best

    def one_lo(i):
        rng = rng_for(seed, f"{tag}/{i}")
        kind = "basis" if i == 0 else "random"
        La = _initial_rows(rng, n_out, da, kind)
        Lb = _initial_rows(rng, db * db, db, kind)

        def value_of(povm_a, povm_b):
            total = 0.0
            for Q in povm_a:
                rx = _cond_contract(rho_m, da, db, [Q], True)[0]
                sx = _cond_contract(sig_m, da, db, [Q], True)[0]
                p = np.array([float(np.real(np.trace(R @ rx))) for R in povm_b])
                q = np.array([float(np.real(np.trace(R @ sx))) for R in povm_b])
                total += obj.phi(np.clip(p, 0, None), np.clip(q, 0, None)).sum()
            return float(total)

        best = None
        for _ in range(rounds):
            povm_b = _povm_from_rows(Lb)
            ops_r = _cond_contract(rho_m, da, db, povm_b, False)
            ops_s = _cond_contract(sig_m, da, db, povm_b, False)
            La = _ascend_rows(La, [ops_r] * n_out, [ops_s] * n_out, obj)
            povm_a = _povm_from_rows(La)
            ops_r = _cond_contract(rho_m, da, db, povm_a, True)
            ops_s = _cond_contract(sig_m, da, db, povm_a, True)
            Lb = _ascend_rows(Lb, [ops_r] * (db * db), [ops_s] * (db * db), obj)
            val = value_of(_povm_from_rows(La), _povm_from_rows(Lb))
            if best is None or (better(val, best[0]) == val and abs(val - best[0]) > 1e-12):
                best = (val, _povm_from_rows(La), _povm_from_rows(Lb))
            else:
                break
        return best

    fn = one_locc1 if locc1 else one_lo
    results = indexed_map(fn, max(restarts, 1), threads)
    return better(results, key=lambda t: t[0])


def d_locc1(rho, sigma, cut=None, restarts: int = DEFAULT_RESTARTS,
            seed: int = 0, rounds: int = 6, threads: int = 1,
            extra_starts=None) -> MeasuredValue:
    """One-round one-way measured relative entropy, measuring cut[0] first.

    Alternates an exact conditional step (per measure-side outcome the best
    conditional projective measurement, solved by the unrestricted solver on
    the conditional pair) with gradient ascent over the rank-1 measure-side
    POVM in its square-root parametrization; multi-start, best value kept.
    """
    rho_op, sig_op = _op(rho), _op(sigma)
    if cut is None:
        labs = rho_op.layout.labels
        cut = (labs[:1], labs[1:])
    rho_m, da, db = _bipartite(rho_op, cut)
    sig_m, _, _ = _bipartite(sig_op, cut)
    if _support_violation(rho_m, sig_m):
        return MeasuredValue(math.inf, "exact", diagnostics={"support_ok": False})
    val, povm, bases = _structured_search(
        KLObjective, rho_m, sig_m, da, db, restarts, seed, rounds,
        "d_locc1", threads, extra_starts, locc1=True)
    elements = []
    structure_b = {}
    for x, (Q, basis) in enumerate(zip(povm, bases)):
        projs = [np.outer(basis[:, z], basis[:, z].conj())
                 for z in range(basis.shape[1])]
        structure_b[x] = projs
        elements.extend(np.kron(Q, P) for P in projs)
    lay = SystemLayout(_as_labels(cut[0]) + _as_labels(cut[1]),
                       rho_op.layout.dims_of(cut[0]) + rho_op.layout.dims_of(cut[1]))
    witness = Measurement("LOCC1", elements, lay,
                          {"a_povm": povm, "b_projectors": structure_b, "cut": cut})
    return MeasuredValue(val, "lower", witness,
                         {"restarts": restarts, "support_ok": True})


def d_lo(rho, sigma, cut=None, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
         rounds: int = 6, threads: int = 1) -> MeasuredValue:
    """Locally measured relative entropy (no communication), by alternating
    square-root-parametrized ascent over the two local rank-1 POVMs."""
    rho_op, sig_op = _op(rho), _op(sigma)
    if cut is None:
        labs = rho_op.layout.labels
        cut = (labs[:1], labs[1:])
    rho_m, da, db = _bipartite(rho_op, cut)
    sig_m, _, _ = _bipartite(sig_op, cut)
    if _support_violation(rho_m, sig_m):
        return MeasuredValue(math.inf, "exact", diagnostics={"support_ok": False})
    val, povm_a, povm_b = _structured_search(
        KLObjective, rho_m, sig_m, da, db, restarts, seed, rounds,
        "d_lo", threads, locc1=False)
    lay = SystemLayout(_as_labels(cut[0]) + _as_labels(cut[1]),
                       rho_op.layout.dims_of(cut[0]) + rho_op.layout.dims_of(cut[1]))
    elements = [np.kron(Q, R) for Q in povm_a for R in povm_b]
    witness = Measurement("LO", elements, lay,
                          {"a_povm": povm_a, "b_povm": povm_b, "cut": cut})
    return MeasuredValue(val, "lower", witness,
                         {"restarts": restarts, "support_ok": True})


# ---------------------------------------------------------------------------
# Cone relaxations

def _project_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def _pt_spec(m: np.ndarray, dims, group_positions) -> np.ndarray:
    n = len(dims)
    t = m.reshape(tuple(dims) + tuple(dims))
    perm = list(range(2 * n))
    for p in group_positions:
        perm[p], perm[n + p] = perm[n + p], perm[p]
    return t.transpose(perm).reshape(m.shape)


def dykstra_psd_pt(m: np.ndarray, dims, pt_groups, iters: int = 200,
                   tol: float = 1e-11) -> np.ndarray:
    """Dykstra alternation onto the intersection of the PSD cone and the
    PSD-after-partial-transpose cones for each group in ``pt_groups``."""
    sets = [None] + list(pt_groups)  # None = plain PSD
    x = m.copy()
    corrections = [np.zeros_like(m) for _ in sets]
    for _ in range(iters):
        start = x.copy()
        for idx, g in enumerate(sets):
            y = x + corrections[idx]
            if g is None:
                proj = _project_psd(y)
            else:
                proj = _pt_spec(_project_psd(_pt_spec(y, dims, g)), dims, g)
            corrections[idx] = y - proj
            x = proj
        if np.abs(x - start).max() < tol:
            break
    return (x + x.conj().T) / 2


def best_product_vector(M: np.ndarray, dims, rng, sigma=None, inits: int = 10,
                        sweeps: int = 30, warm=None):
    """Maximize <v|M|v> (or the ratio against sigma) over product unit
    vectors by alternating per-party (generalized) top-eigenvector steps.

    ``warm`` supplies starting vector tuples tried before the random inits.
    """
    dims = list(dims)
    n = len(dims)
    letters = "abcdefgh"[:n]
    Mt = M.reshape(dims + dims)
    St = sigma.reshape(dims + dims) if sigma is not None else None

    def contract(tensor, vecs, skip):
        spec = letters + letters.upper()
        args, sub = [tensor], [spec]
        for g in range(n):
            if g == skip:
                continue
            args += [vecs[g].conj(), vecs[g]]
            sub += [letters[g], letters[g].upper()]
        out = letters[skip] + letters[skip].upper()
        return np.einsum(",".join(sub) + "->" + out, *args)

    starts = [list(w) for w in (warm or [])]
    for _ in range(inits):
        vecs = []
        for d in dims:
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            vecs.append(v / np.linalg.norm(v))
        starts.append(vecs)
    best = (-math.inf, None)
    for vecs in starts:
        vecs = list(vecs)
        for _ in range(sweeps):
            moved = 0.0
            for g in range(n):
                A = contract(Mt, vecs, g)
                A = (A + A.conj().T) / 2
                if St is not None:
                    B = contract(St, vecs, g)
                    B = (B + B.conj().T) / 2 + 1e-13 * np.eye(dims[g])
                    _, v = sla.eigh(A, B)
                else:
                    _, v = np.linalg.eigh(A)
                new = v[:, -1] / np.linalg.norm(v[:, -1])
                moved = max(moved, float(abs(abs(new.conj() @ vecs[g]) - 1.0)))
                vecs[g] = new
            if moved < 1e-12:
                break
        vfull = vecs[0]
        for vv in vecs[1:]:
            vfull = np.kron(vfull, vv)
        num = float(np.real(vfull.conj() @ M @ vfull))
        if St is not None:
            val = num / max(float(np.real(vfull.conj() @ sigma @ vfull)), 1e-300)
        else:
            val = num
        if val > best[0]:
            best = (val, vecs)
    return best


def cone_bound(rho, sigma, cone_tag: str, cut=None, seed: int = 0,
               max_iter: int = 200, inits: int = 10) -> MeasuredValue:
    """Upper bound on the SEPP/PPT measured relative entropy: maximize
    tr[rho log w] - log tr[sigma w] over the measurement-class cone.

    PPT uses projected gradient ascent with Dykstra alternation; SEPP uses
    conditional-gradient steps whose linear oracle is a best-product-state
    search.  Any feasible iterate lower-bounds the cone supremum, which
    itself upper-bounds the corresponding measured relative entropy.
    """
    if cone_tag not in ("SEPP", "PPT"):
        raise ParameterError(f"unsupported cone {cone_tag!r}")
    rho_op, sig_op = _op(rho), _op(sigma)
    if cut is None:
        labs = rho_op.layout.labels
        cut = (labs[:1], labs[1:])
    groups = [_as_labels(g) for g in cut]
    order = sum(groups, ())
    rho_m = permute(rho_op, order).entries
    sig_m = permute(sig_op, order).entries
    dims = [rho_op.layout.dim_of(g) for g in groups]
    flat_dims = []
    group_positions = []
    pos = 0
    for g, dg in zip(groups, dims):
        group_positions.append([pos])
        flat_dims.append(dg)
        pos += 1
    d = rho_op.dim
    if _support_violation(rho_m, sig_m):
        return MeasuredValue(math.inf, "exact", diagnostics={"support_ok": False})
    rng = rng_for(seed, f"cone/{cone_tag}")

    def objective(w):
        tr_s = float(np.real(np.trace(sig_m @ w)))
        if tr_s <= 0:
            return -math.inf
        lw, vw = np.linalg.eigh((w + w.conj().T) / 2)
        mask = lw > SUPPORT_RTOL * max(lw.max(), 1e-300)
        outside = vw[:, ~mask]
        if outside.shape[1]:
            leak = float(np.real(np.einsum("ij,ik,kj->", outside.conj(),
                                           rho_m, outside)))
            if leak > 1e-11:
                return -math.inf
        return float(np.real(np.trace(rho_m @ _logm_psd(w)))) - math.log(tr_s)

    w = np.eye(d, dtype=complex)
    val = objective(w)
    if cone_tag == "PPT":
        pt_groups = group_positions  # one PT constraint per party
        eta = 0.5
        for _ in range(max_iter):
            grad = log_frechet_adjoint(w, rho_m) \
                - sig_m / float(np.real(np.trace(sig_m @ w)))
            grad = (grad + grad.conj().T) / 2
            gn = np.linalg.norm(grad)
            if gn < 1e-10:
                break
            improved = False
            e = eta
            for _ in range(25):
                cand = dykstra_psd_pt(w + e * grad / gn, flat_dims, pt_groups)
                cand = cand + 1e-13 * np.eye(d)
                cand /= float(np.real(np.trace(sig_m @ cand)))
                cv = objective(cand)
                if cv > val + 1e-14:
                    w, val = cand, cv
                    eta = min(e * 1.5, 5.0)
                    improved = True
                    break
                e *= 0.5
            if not improved:
                break
        cert = {"pt_min_eigenvalues": {
            str(groups[i]): float(np.linalg.eigvalsh(
                _pt_spec(w, flat_dims, group_positions[i])).min())
            for i in range(len(groups))}}
    else:
        atoms = [("identity", 1.0)]
        gap = math.inf
        for _ in range(max_iter):
            grad_log = log_frechet_adjoint(w, rho_m)
            grad_log = (grad_log + grad_log.conj().T) / 2
            _, vecs = best_product_vector(grad_log, dims, rng, sigma=sig_m,
                                          inits=inits)
            vfull = vecs[0]
            for vv in vecs[1:]:
                vfull = np.kron(vfull, vv)
            denom = max(float(np.real(vfull.conj() @ sig_m @ vfull)), 1e-300)
            vertex = np.outer(vfull, vfull.conj()) / denom
            full_grad = grad_log - sig_m / float(np.real(np.trace(sig_m @ w)))
            gap = float(np.real(np.trace(full_grad @ (vertex - w))))
            if gap <= 1e-9:
                break

            def neg(gamma):
                return -objective((1 - gamma) * w + gamma * vertex)

            step = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded",
                                   options={"xatol": 1e-12})
            g = float(step.x)
            if g < 1e-14:
                break
            w = (1 - g) * w + g * vertex
            atoms = [(a, c * (1 - g)) for a, c in atoms]
            atoms.append((tuple(vecs), g / denom))
            val = objective(w)
        cert = {"atoms": atoms, "fw_gap": gap}

    lay = SystemLayout(order, sum((rho_op.layout.dims_of(g) for g in groups), ()))
    witness = ConeElement(cone_tag, w, lay, cert)
    return MeasuredValue(max(val, 0.0), "upper", witness, {"support_ok": True})


# ---------------------------------------------------------------------------
# Restricted fidelity and trace norm

def restricted_fid_norm(rho, sigma, class_tag: str, cut=None,
                        restarts: int = 8, seed: int = 0,
                        rounds: int = 5) -> tuple[float, float]:
    """Fidelity and trace-norm estimates under a measurement class.

    ALL is exact (F = ||sqrt(rho) sqrt(sigma)||_1^2 and the trace norm); LO
    and LOCC1 extremize heuristically over the class parametrization, so the
    fidelity is an upper estimate of the class optimum and the norm a lower
    estimate.  Two-outcome conditional measurements realize the norm.
    """
    rho_op, sig_op = _op(rho), _op(sigma)
    if class_tag == "ALL":
        return (fidelity(rho_op, sig_op),
                trace_norm(rho_op.entries - sig_op.entries))
    if class_tag not in ("LO", "LOCC1"):
        raise ParameterError(f"unsupported class {class_tag!r}")
    if cut is None:
        labs = rho_op.layout.labels
        cut = (labs[:1], labs[1:])
    rho_m, da, db = _bipartite(rho_op, cut)
    sig_m, _, _ = _bipartite(sig_op, cut)
    locc1 = class_tag == "LOCC1"
    bh, _, _ = _structured_search(BhattacharyyaObjective, rho_m, sig_m, da, db,
                                  restarts, seed, rounds,
                                  f"fid/{class_tag}", locc1=locc1)
    l1, _, _ = _structured_search(L1Objective, rho_m, sig_m, da, db,
                                  restarts, seed, rounds,
                                  f"norm/{class_tag}", locc1=locc1)
    return float(bh) ** 2, float(l1)


# ---------------------------------------------------------------------------
# One-way DPI witness pushback

def pushback_value(channel, meas: Measurement, rho, sigma) -> float:
    """KL of the input-side measurement obtained by pushing an LOCC1 witness
    through the adjoint of a one-way channel sum_k E_k (x) F_k.

    Outcome (k, x, z) has effect E_k^dag(Q_x) (x) F_k^dag(P_{z|x}); by the
    log-sum inequality its KL is at least the witness value on the channel
    outputs.
    """
    rho_m, da, db = _bipartite(_op(rho), meas.structure["cut"])
    sig_m, _, _ = _bipartite(_op(sigma), meas.structure["cut"])
    povm = meas.structure["a_povm"]
    projs = meas.structure["b_projectors"]
    p_list, q_list = [], []
    for akraus, bkraus in channel.branches:
        for x, Q in enumerate(povm):
            qa = sum(k.conj().T @ Q @ k for k in akraus)
            for P in projs[x]:
                pb = sum(k.conj().T @ P @ k for k in bkraus)
                eff = np.kron(qa, pb)
                p_list.append(float(np.real(np.trace(eff @ rho_m))))
                q_list.append(float(np.real(np.trace(eff @ sig_m))))
    p = np.clip(np.array(p_list), 0.0, None)
    q = np.clip(np.array(q_list), 0.0, None)
    return _kl_raw(p / p.sum(), q / max(q.sum(), 1e-300))
