"""Entropy functionals: von Neumann entropy, relative entropy with support
handling, the mutual-information combinations used by the inequality checks,
and the exponential-form identity for conditional mutual information."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linop import (
    DomainError, LabeledOperator, LayoutError, ParameterError, QuantumState,
    SeparableDecomposition, SystemLayout, SUPPORT_RTOL,
    decompose_product_mixture, embed, matfun, partial_trace, spectral, state,
    _as_labels,
)


@dataclass(frozen=True)
class DivergenceValue:
    """Relative-entropy value in nats; infinite exactly on support violation."""

    value: float
    support_ok: bool

    def __post_init__(self):
        if self.support_ok and not math.isfinite(self.value):
            raise ParameterError("finite value required when support_ok")
        if not self.support_ok and self.value != math.inf:
            object.__setattr__(self, "value", math.inf)

    def __float__(self) -> float:
        return self.value

    @property
    def finite(self) -> bool:
        return self.support_ok


def _op(x) -> LabeledOperator:
    return x.op if isinstance(x, QuantumState) else x


def _entropy_of_spectrum(w: np.ndarray) -> float:
    w = np.clip(np.real(w), 0.0, None)
    nz = w[w > 1e-15]
    return float(-(nz * np.log(nz)).sum())


def vn_entropy(rho, subsystems=None) -> float:
    """von Neumann entropy of the marginal on ``subsystems`` (all if None)."""
    op = _op(rho)
    if subsystems is not None:
        keep = set(_as_labels(subsystems))
        op = partial_trace(op, [l for l in op.layout.labels if l not in keep])
    w, _ = spectral(op)
    return max(_entropy_of_spectrum(w), 0.0)


def umegaki(rho, sigma) -> DivergenceValue:
    """Umegaki relative entropy tr rho (log rho - log sigma) in nats.

    Computed on the support of sigma; infinite when the support of rho is
    not contained in it, matching the continuous extension of both states
    toward the completely mixed state.
    """
    rho_op, sig_op = _op(rho), _op(sigma)
    if rho_op.layout != sig_op.layout:
        raise LayoutError("umegaki requires matching layouts")
    ws, vs = spectral(sig_op)
    top = max(ws.max(), 0.0)
    mask = ws > SUPPORT_RTOL * max(top, 1e-300)
    outside = vs[:, ~mask]
    if outside.shape[1]:
        leak = float(np.real(np.einsum("ij,ik,kj->", outside.conj(), rho_op.entries,
                                       outside)))
        if leak > 1e-12:
            return DivergenceValue(math.inf, support_ok=False)
    iso = vs[:, mask]
    r = iso.conj().T @ rho_op.entries @ iso
    s = np.diag(ws[mask])
    wr, vr = np.linalg.eigh((r + r.conj().T) / 2)
    wr = np.clip(wr, 0.0, None)
    ent = _entropy_of_spectrum(wr)
    cross = float(np.real(np.trace(r @ np.diag(np.log(ws[mask])))))
    val = -ent - cross
    return DivergenceValue(max(val, 0.0) if val > -1e-9 else val, support_ok=True)


def _marginal_entropy(rho, labels) -> float:
    return vn_entropy(rho, labels)


def _check_disjoint_cover(lay: SystemLayout, groups) -> list[tuple[str, ...]]:
    groups = [_as_labels(g) for g in groups]
    flat = [l for g in groups for l in g]
    if len(set(flat)) != len(flat):
        raise LayoutError(f"label groups overlap: {groups}")
    if set(flat) != set(lay.labels):
        raise LayoutError(f"groups {groups} do not cover layout {lay.labels}")
    return groups


def cqmi(rho, A, B, C) -> float:
    """Conditional mutual information H(AC) + H(BC) - H(C) - H(ABC)."""
    op = _op(rho)
    A, B, C = _check_disjoint_cover(op.layout, [A, B, C])
    h_ac = vn_entropy(rho, A + C)
    h_bc = vn_entropy(rho, B + C)
    h_c = vn_entropy(rho, C) if C else 0.0
    h_abc = vn_entropy(rho)
    return h_ac + h_bc - h_c - h_abc


def mutual_info(rho, A, B) -> float:
    op = _op(rho)
    A, B = _check_disjoint_cover(op.layout, [A, B])
    return vn_entropy(rho, A) + vn_entropy(rho, B) - vn_entropy(rho)


def tripartite_mi(rho, A, B, C) -> float:
    """H(A) + H(B) + H(C) - H(ABC)."""
    op = _op(rho)
    A, B, C = _check_disjoint_cover(op.layout, [A, B, C])
    return (vn_entropy(rho, A) + vn_entropy(rho, B) + vn_entropy(rho, C)
            - vn_entropy(rho))


def cemi_term(rho, A, Abar, B, Bbar) -> float:
    """I(A Abar : B Bbar) - I(Abar : Bbar)."""
    op = _op(rho)
    A, Abar, B, Bbar = _check_disjoint_cover(op.layout, [A, Abar, B, Bbar])
    full = (vn_entropy(rho, A + Abar) + vn_entropy(rho, B + Bbar)
            - vn_entropy(rho))
    inner_rho = partial_trace(op, A + B)
    inner = (vn_entropy(inner_rho, Abar) + vn_entropy(inner_rho, Bbar)
             - vn_entropy(inner_rho))
    return full - inner


def cemi_term3(rho, A, Abar, B, Bbar, C, Cbar) -> float:
    """I(A Abar : B Bbar : C Cbar) - I(Abar : Bbar : Cbar)."""
    op = _op(rho)
    groups = _check_disjoint_cover(op.layout, [A, Abar, B, Bbar, C, Cbar])
    A, Abar, B, Bbar, C, Cbar = groups
    full = (vn_entropy(rho, A + Abar) + vn_entropy(rho, B + Bbar)
            + vn_entropy(rho, C + Cbar) - vn_entropy(rho))
    inner_rho = partial_trace(op, A + B + C)
    inner = (vn_entropy(inner_rho, Abar) + vn_entropy(inner_rho, Bbar)
             + vn_entropy(inner_rho, Cbar) - vn_entropy(inner_rho))
    return full - inner


def tripartite_cqmi(rho, A1, A2, A3, C) -> float:
    """I(A1:A2|C) + I(A1 A2 : A3 | C)."""
    op = _op(rho)
    A1, A2, A3, C = _check_disjoint_cover(op.layout, [A1, A2, A3, C])
    first = (vn_entropy(rho, A1 + C) + vn_entropy(rho, A2 + C)
             - (vn_entropy(rho, C) if C else 0.0)
             - vn_entropy(rho, A1 + A2 + C))
    second = (vn_entropy(rho, A1 + A2 + C) + vn_entropy(rho, A3 + C)
              - (vn_entropy(rho, C) if C else 0.0) - vn_entropy(rho))
    return first + second


def exp_state_form(rho, A, B, C) -> tuple[LabeledOperator, float]:
    """Return exp(log rho_AC + log rho_BC - log rho_C) on the full layout and
    the relative entropy of rho to it (which equals the CQMI)."""
    op = _op(rho)
    A, B, C = _check_disjoint_cover(op.layout, [A, B, C])
    lay = op.layout
    rho_ac = partial_trace(op, B)
    rho_bc = partial_trace(op, A)
    rho_c = partial_trace(op, A + B)
    w_c, _ = spectral(rho_c)
    if w_c.min() < SUPPORT_RTOL * max(w_c.max(), 1e-300):
        raise DomainError("conditioning marginal is rank deficient")
    combo = (embed(matfun(rho_ac, "log"), lay).entries
             + embed(matfun(rho_bc, "log"), lay).entries
             - embed(matfun(rho_c, "log"), lay).entries)
    sigma = matfun(LabeledOperator(lay, combo, True), "exp")
    div = umegaki(rho, sigma)
    return sigma, float(div)


@dataclass(frozen=True)
class ClassicalIdentityReport:
    cmi: float
    recovery_divergence: float
    markov_divergence: float

    @property
    def max_deviation(self) -> float:
        return max(abs(self.cmi - self.recovery_divergence),
                   abs(self.cmi - self.markov_divergence))


def _shannon(p: np.ndarray) -> float:
    nz = p[p > 1e-300]
    return float(-(nz * np.log(nz)).sum())


def _classical_kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 1e-300
    if np.any(q[mask] <= 0):
        return math.inf
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


def classical_identities(P: np.ndarray) -> ClassicalIdentityReport:
    """Verify that the conditional mutual information of a tripartite pmf
    equals its relative entropy to the conditional-recovery distribution and
    to the induced Markov-chain distribution.

    ``P`` has axes (A, B, C) and must sum to 1.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 3 or P.min() < -1e-15 or abs(P.sum() - 1.0) > 1e-12:
        raise ParameterError("expected a normalized pmf with three axes")
    P = np.clip(P, 0.0, None)
    pc = P.sum(axis=(0, 1))
    pac = P.sum(axis=1)
    pbc = P.sum(axis=0)
    cmi = _shannon(pac.ravel()) + _shannon(pbc.ravel()) - _shannon(pc) - _shannon(P.ravel())

    # conditional distribution of B given C, restricted to supp P_C
    with np.errstate(divide="ignore", invalid="ignore"):
        b_given_c = np.where(pc[None, :] > 0, pbc / pc[None, :], 0.0)
    recovery = pac[:, None, :] * b_given_c[None, :, :]
    markov = recovery  # P_{B|C} P_{A|C} P_C assembled from the same factors
    with np.errstate(divide="ignore", invalid="ignore"):
        a_given_c = np.where(pc[None, :] > 0, pac / pc[None, :], 0.0)
    markov = a_given_c[:, None, :] * b_given_c[None, :, :] * pc[None, None, :]
    d_rec = _classical_kl(P.ravel(), recovery.ravel())
    d_mar = _classical_kl(P.ravel(), markov.ravel())
    return ClassicalIdentityReport(cmi, d_rec, d_mar)


def markov_state(weights, blocks, labels=("A", "C", "B")) -> tuple[QuantumState, SeparableDecomposition]:
    """Assemble a short quantum Markov chain from a direct-sum decomposition.

    ``blocks[k]`` is a pair (left, right): ``left`` acts on A x CL_k and
    ``right`` on CR_k x B, given as square arrays with the two local
    dimensions inferred from a (dims_left, dims_right) tuple per block:
    each entry is ((matrix, (dA, dCL)), (matrix, (dCR, dB))).

    Returns the state on labels (A, C, B) together with the separable
    decomposition of its AB marginal.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or len(weights) != len(blocks):
        raise ParameterError("weights and blocks mismatch")
    if abs(weights.sum() - 1.0) > 1e-10 or weights.min() < 0:
        raise ParameterError("weights must form a probability vector")
    dims_a = set()
    dims_b = set()
    parsed = []
    for (left, ldims), (right, rdims) in blocks:
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        da, dl = ldims
        dr, db = rdims
        if left.shape != (da * dl, da * dl) or right.shape != (dr * db, dr * db):
            raise ParameterError("block dimensions inconsistent with matrices")
        dims_a.add(da)
        dims_b.add(db)
        parsed.append((left, da, dl, right, dr, db))
    if len(dims_a) != 1 or len(dims_b) != 1:
        raise ParameterError("A and B dimensions must agree across blocks")
    da = dims_a.pop()
    db = dims_b.pop()
    dc = sum(dl * dr for _, _, dl, _, dr, _ in parsed)
    la, lc, lb = labels
    lay = SystemLayout((la, lc, lb), (da, dc, db))

    full = np.zeros((lay.dim, lay.dim), dtype=complex)
    view = full.reshape(da, dc, db, da, dc, db)
    offset = 0
    ab_factors = []
    for wk, (left, _, dl, right, dr, _) in zip(weights, parsed):
        # order (A, CL, CR, B), then fold (CL, CR) into the C block at offset
        blk = np.kron(left, right).reshape(da, dl, dr, db, da, dl, dr, db)
        blk = blk.reshape(da, dl * dr, db, da, dl * dr, db)
        sl = slice(offset, offset + dl * dr)
        view[:, sl, :, :, sl, :] += wk * blk
        offset += dl * dr
        sig_a = np.trace(left.reshape(da, dl, da, dl), axis1=1, axis2=3)
        sig_b = np.trace(right.reshape(dr, db, dr, db), axis1=0, axis2=2)
        ab_factors.append([sig_a, sig_b])

    full = (full + full.conj().T) / 2
    tr = np.trace(full).real
    if abs(tr - 1.0) > 1e-9:
        raise ParameterError(f"blocks are not normalized states (trace {tr})")
    st = state(full / tr, lay)
    sep = decompose_product_mixture(weights, ab_factors, ((la,), (lb,)),
                                    SystemLayout((la, lb), (da, db)))
    return st, sep
