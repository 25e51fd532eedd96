"""Rotated recovery channels and their averages.

The averaging density  (pi/2) / (cosh(pi t) + 1)  is realized by an
exact-weight trapezoid rule on a truncated symmetric grid (the tail beyond
|t| = 12 carries mass ~4e-17).  A rotated recovery map with anchor state
rho on (F, K) sends operators on K to operators on (F, K):

    X  ->  rho_FK^{(1+it)/2} rho_K^{(-1-it)/2} X rho_K^{(-1+it)/2} rho_FK^{(1-it)/2}

It is completely positive, trace preserving on the support of rho_K, and
recovers short Markov chains exactly at every t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linop import (
    DomainError, LabeledOperator, LayoutError, ParameterError, QuantumState,
    SeparableDecomposition, SystemLayout, decompose_product_mixture, embed,
    matfun, partial_trace, partial_transpose, permute, spectral, state,
    tensor, _as_labels,
)
from .measured import _psd_sqrt, fidelity

DEFAULT_NODES = 201
TRUNCATION = 12.0


def beta0_density(t) -> np.ndarray:
    """Averaging density (pi/2) (cosh(pi t) + 1)^{-1}; value pi/4 at t=0."""
    t = np.asarray(t, dtype=float)
    return (np.pi / 2) / (np.cosh(np.pi * t) + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights realizing the averaging integral."""

    nodes: np.ndarray
    weights: np.ndarray
    truncation: float
    count: int

    def integrate(self, values) -> complex:
        return np.tensordot(self.weights, np.asarray(values), axes=1)


def beta0_rule(n: int = DEFAULT_NODES, truncation: float = TRUNCATION) -> QuadratureRule:
    """Symmetric trapezoid rule with the exact density as weight.

    The density decays like e^{-pi |t|}, so the truncated tail is below
    1e-16 for the default window and the trapezoid sum converges
    geometrically in the node count for the bounded oscillatory integrands
    appearing in the trace-inequality checks.
    """
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise ParameterError("node count must be odd and at least 3")
    t = np.linspace(-truncation, truncation, n)
    h = t[1] - t[0]
    w = np.full(n, h)
    w[0] *= 0.5
    w[-1] *= 0.5
    w = w * beta0_density(t)
    # exact unit mass so that nodewise trace-preserving maps average to a
    # trace-preserving map at every node count
    w = w / w.sum()
    return QuadratureRule(t, w, truncation, n)


@dataclass(frozen=True)
class RecoveryMap:
    """Rotated recovery channel built from an anchor state on (F, K)."""

    anchor_layout: SystemLayout
    source: tuple[str, ...]
    t: float
    kmat: np.ndarray = field(repr=False)

    @property
    def target(self) -> tuple[str, ...]:
        return self.anchor_layout.labels

    def apply_matrix(self, x: np.ndarray) -> np.ndarray:
        """Apply to an operator on the source factor alone."""
        df = self.anchor_layout.dim // self.anchor_layout.dim_of(self.source)
        lifted = np.kron(np.eye(df), x)
        # anchor layout is ordered (F..., K...); the embedded input acts on K
        return self.kmat @ lifted @ self.kmat.conj().T

    def apply(self, x: LabeledOperator | QuantumState) -> LabeledOperator:
        """Apply to the source factor of ``x``, tensoring the new systems on.

        Output layout: the labels of ``x`` other than the source, followed by
        the anchor labels (F..., K...).
        """
        op = x.op if isinstance(x, QuantumState) else x
        src = self.source
        rest = [l for l in op.layout.labels if l not in src]
        ordered = permute(op, tuple(rest) + tuple(src)) if rest else permute(op, src)
        dr = op.layout.dim_of(rest) if rest else 1
        ds = op.layout.dim_of(src)
        kfull = np.kron(np.eye(dr), self.kmat)
        df = self.anchor_layout.dim // ds
        # lift input on (rest, K) to (rest, F, K)
        t = ordered.entries.reshape(dr, ds, dr, ds)
        lifted = np.einsum("ab,icjd->iacjbd", np.eye(df), t).reshape(
            dr * df * ds, dr * df * ds)
        out = kfull @ lifted @ kfull.conj().T
        lay = SystemLayout(tuple(rest) + self.anchor_layout.labels,
                           tuple(op.layout.dims_of(rest)) + self.anchor_layout.dims)
        return LabeledOperator(lay, out, True)

    def choi(self) -> np.ndarray:
        ds = self.anchor_layout.dim_of(self.source)
        dout = self.anchor_layout.dim
        C = np.zeros((dout * ds, dout * ds), dtype=complex)
        for i in range(ds):
            for j in range(ds):
                E = np.zeros((ds, ds), dtype=complex)
                E[i, j] = 1.0
                C += np.kron(self.apply_matrix(E), E)
        return C


def rotated_petz(anchor, keep, t: float) -> RecoveryMap:
    """Recovery map rebuilding the ``keep`` factors of the anchor from the
    rest: sends operators on K = anchor minus keep to operators on the full
    anchor space."""
    op = anchor.op if isinstance(anchor, QuantumState) else anchor
    keep = _as_labels(keep)
    src = tuple(l for l in op.layout.labels if l not in keep)
    if not src:
        raise ParameterError("recovery source is empty")
    ordered = permute(op, tuple(keep) + src)
    marg = partial_trace(ordered, keep)
    w, _ = spectral(marg)
    if w.max() <= 0:
        raise DomainError("anchor marginal has empty support")
    joint_pow = matfun(ordered, "power", (1 + 1j * t) / 2)
    marg_pow = matfun(marg, "power", (-1 - 1j * t) / 2)
    df = op.layout.dim_of(keep)
    kmat = joint_pow.entries @ np.kron(np.eye(df), marg_pow.entries)
    lay = SystemLayout(tuple(keep) + src,
                       op.layout.dims_of(keep) + op.layout.dims_of(src))
    return RecoveryMap(lay, src, float(t), kmat)


def averaged_recover(x, rule: QuadratureRule, tensor_maps,
                     renormalize: bool = False):
    """Quadrature average of rotated recovery maps applied in sequence.

    ``tensor_maps`` is a list of (anchor, keep) pairs; at each node the maps
    are built at the same t and applied one after another, which realizes
    tensor products when the sources are disjoint and compositions when a
    later map consumes an output factor of an earlier one.  For inputs with
    a separability certificate use ``averaged_recover_decomposition``.
    """
    op = x.op if isinstance(x, QuantumState) else x
    acc = None
    lay = None
    for ti, wi in zip(rule.nodes, rule.weights):
        cur = op
        for anchor, keep in tensor_maps:
            cur = rotated_petz(anchor, keep, ti).apply(cur)
        if acc is None:
            lay = cur.layout
            acc = wi * cur.entries
        else:
            acc = acc + wi * permute(cur, lay.labels).entries
    acc = (acc + acc.conj().T) / 2
    if renormalize:
        acc = acc / np.trace(acc).real
    return LabeledOperator(lay, acc, True)


def averaged_recover_decomposition(dec: SeparableDecomposition,
                                   rule: QuadratureRule, map_specs,
                                   out_partition):
    """Average tensored recovery maps over a separable decomposition,
    returning the recovered operator together with its inherited
    decomposition across ``out_partition``.

    ``map_specs[g]`` is (anchor, keep) for the partition group g (or None to
    leave that group untouched).
    """
    groups = dec.partition
    if len(map_specs) != len(groups):
        raise ParameterError("one map spec per partition group required")
    terms_w = []
    terms_f = []
    for wk, vecs in zip(dec.weights, dec.vectors):
        for ti, wi in zip(rule.nodes, rule.weights):
            factors = []
            for g, spec in enumerate(map_specs):
                proj = np.outer(vecs[g], vecs[g].conj())
                if spec is None:
                    factors.append(proj)
                else:
                    anchor, keep = spec
                    factors.append(
                        rotated_petz(anchor, keep, ti).apply_matrix(proj))
            terms_w.append(wk * wi)
            terms_f.append(factors)
    total = sum(terms_w)
    new_lay_labels = []
    new_lay_dims = []
    for g, spec in enumerate(map_specs):
        if spec is None:
            new_lay_labels.extend(groups[g])
            new_lay_dims.extend(dec.layout.dims_of(groups[g]))
        else:
            anchor, keep = spec
            op = anchor.op if isinstance(anchor, QuantumState) else anchor
            lay = rotated_petz(anchor, keep, 0.0).anchor_layout
            new_lay_labels.extend(lay.labels)
            new_lay_dims.extend(lay.dims)
    lay = SystemLayout(tuple(new_lay_labels), tuple(new_lay_dims))
    out_dec = decompose_product_mixture(
        np.array(terms_w) / total, terms_f, out_partition, lay)
    assembled = sum(w * _kron_all(f) for w, f in zip(terms_w, terms_f))
    assembled = (assembled + assembled.conj().T) / 2
    return LabeledOperator(lay, assembled, True), out_dec


def _kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def transpose_twirl_identity(anchor, keep, t: float) -> float:
    """Deviation of the transpose-commutation identity: transposing the
    output of a rotated recovery map equals the map with fully transposed
    anchor marginals at -t applied to the transposed input.

    Returns the max entrywise deviation of the two Choi operators.
    """
    op = anchor.op if isinstance(anchor, QuantumState) else anchor
    direct = rotated_petz(op, keep, t)
    transposed_anchor = LabeledOperator(op.layout, op.entries.T, True)
    twin = rotated_petz(transposed_anchor, keep, -t)
    ds = direct.anchor_layout.dim_of(direct.source)
    dout = direct.anchor_layout.dim
    c_lhs = np.zeros((dout * ds, dout * ds), dtype=complex)
    c_rhs = np.zeros_like(c_lhs)
    for i in range(ds):
        for j in range(ds):
            E = np.zeros((ds, ds), dtype=complex)
            E[i, j] = 1.0
            c_lhs += np.kron(direct.apply_matrix(E).T, E)
            c_rhs += np.kron(twin.apply_matrix(E.T), E)
    return float(np.abs(c_lhs - c_rhs).max())


# ---------------------------------------------------------------------------
# The recovered-state construction for the one-way monogamy chain

@dataclass
class GammaOutput:
    gamma_full: LabeledOperator           # recovered state on (A, B', C)
    gamma_ab: LabeledOperator             # its (A, B') marginal
    gamma_ab_decomposition: SeparableDecomposition
    gamma_hat_ac: LabeledOperator         # sandwiched, renormalized (A, C) state
    gamma_hat_decomposition: SeparableDecomposition
    normalization: float                  # tr[X gamma_ab]


def gamma_construction(rho_abc, sigma_decomp: SeparableDecomposition,
                       x_cq, rule: QuadratureRule,
                       labels=("A", "B", "C")) -> GammaOutput:
    """Assemble the recovered separable states entering the one-way
    monogamy chain.

    ``rho_abc`` is the tripartite state, ``sigma_decomp`` a separable
    decomposition across A:C of the (A, C) reference, and ``x_cq`` (when
    given) a classical-quantum operator described by a list of
    (f_a, effect_b) pairs: PSD blocks F_A^x paired with the rank-1 POVM
    effects Q_B^x of the measuring side (their dilation to orthonormal
    projectors on the doubled space is implicit; all contractions fold back
    to the original space, and cross terms between different outcomes vanish
    in the partial trace, which is what preserves separability).

    Per node, sigma's C factors are pushed through the rotated recovery map
    anchored at rho_BC and tensored with the A factors; the hat state is the
    measured-side-compressed sandwich, renormalized to unit trace.
    """
    la, lb, lc = labels
    op = rho_abc.op if isinstance(rho_abc, QuantumState) else rho_abc
    rho_bc = partial_trace(op, la)
    da = op.layout.dim_of(la)
    db = op.layout.dim_of(lb)
    dc = op.layout.dim_of(lc)

    fblocks, effects, f_eigs = [], [], []
    if x_cq is not None:
        fblocks = [np.asarray(f, dtype=complex) for f, _ in x_cq]
        effects = [np.asarray(q, dtype=complex) for _, q in x_cq]
        total = sum(effects)
        if np.abs(total - np.eye(db)).max() > 1e-9:
            raise DomainError("CQ certificate effects do not sum to identity")
        for q in effects:
            if np.linalg.eigvalsh((q + q.conj().T) / 2).min() < -1e-9:
                raise DomainError("CQ certificate effect is not PSD")
        f_eigs = [np.linalg.eigh(f) for f in fblocks]

    if len(sigma_decomp.partition) != 2:
        raise ParameterError("sigma decomposition must be bipartite A:C")

    # gamma^t = sum_k sigma_A^k (x) R_t(sigma_C^k), averaged over nodes
    gamma_terms_w = []
    gamma_terms_f = []   # product factors (A, BC-output)
    hat_terms_w = []
    hat_terms_f = []     # product factors (A, C)
    gamma_full = np.zeros((da * db * dc,) * 2, dtype=complex)

    for ti, wi in zip(rule.nodes, rule.weights):
        rmap = rotated_petz(rho_bc, lb, ti)   # rebuilds B from C
        for wk, vecs in zip(sigma_decomp.weights, sigma_decomp.vectors):
            a_vec, c_vec = vecs
            proj_c = np.outer(c_vec, c_vec.conj())
            rec = rmap.apply_matrix(proj_c)   # on (B, C)
            proj_a = np.outer(a_vec, a_vec.conj())
            gamma_terms_w.append(wk * wi)
            gamma_terms_f.append([proj_a, rec])
            rec_t = rec.reshape(db, dc, db, dc)
            term = np.einsum("ij,akbl->iakjbl", proj_a,
                             rec_t).reshape(da * db * dc, da * db * dc)
            gamma_full += wk * wi * term
            # hat terms: per outcome x, the measure-side-compressed sandwich
            for (fw, fv), q in zip(f_eigs, effects):
                fpow = (fv * np.exp((1 + 1j * ti) / 2
                                    * np.log(np.clip(fw, 1e-300, None)))) @ fv.conj().T
                a_fac = fpow @ proj_a @ fpow.conj().T
                c_fac = np.einsum("ab,bkal->kl", q, rec_t)
                hat_terms_w.append(wk * wi)
                hat_terms_f.append([a_fac, c_fac])

    gamma_full = (gamma_full + gamma_full.conj().T) / 2
    lay_abc = SystemLayout((la, lb, lc), (da, db, dc))
    gamma_full_op = permute(LabeledOperator(lay_abc, gamma_full, True),
                            op.layout.labels)
    gamma_ab = partial_trace(gamma_full_op, lc)
    lay_ab = SystemLayout((la, lb), (da, db))
    gamma_ab = permute(gamma_ab, (la, lb))

    gamma_ab_dec = decompose_product_mixture(
        gamma_terms_w, [[f[0], partial_trace(
            LabeledOperator(SystemLayout((lb, lc), (db, dc)), f[1], True),
            lc).entries] for f in gamma_terms_f],
        ((la,), (lb,)), lay_ab)

    if x_cq is None:
        return GammaOutput(gamma_full_op, gamma_ab, gamma_ab_dec,
                           None, None, float("nan"))

    hat_raw = sum(w * np.kron(f[0], f[1]) for w, f in zip(hat_terms_w, hat_terms_f))
    hat_raw = (hat_raw + hat_raw.conj().T) / 2
    norm = float(np.trace(hat_raw).real)
    if norm <= 0:
        raise DomainError("hat-state normalization vanished")
    lay_ac = SystemLayout((la, lc), (da, dc))
    gamma_hat = LabeledOperator(lay_ac, hat_raw / norm, True)
    hat_dec = decompose_product_mixture(
        np.array(hat_terms_w) / sum(hat_terms_w), hat_terms_f,
        ((la,), (lc,)), lay_ac)

    # normalization must match tr[X gamma_ab] with X folded back from its
    # dilation: sum_x tr[(F^x (x) Q^x) gamma_AB]
    x_mat = sum(np.kron(f, q) for f, q in zip(fblocks, effects))
    norm_check = float(np.real(np.trace(x_mat @ gamma_ab.entries)))
    return GammaOutput(gamma_full_op, gamma_ab, gamma_ab_dec, gamma_hat,
                       hat_dec, norm_check)


def markov_recovery_deviation(markov: QuantumState, rule: QuadratureRule,
                              labels=("A", "C", "B")) -> float:
    """Trace distance between a Markov-structured state and its recovery
    from the (A, C) marginal through the averaged rotated map."""
    la, lc, lb = labels
    op = markov.op
    rho_ac = partial_trace(op, lb)
    rho_bc = partial_trace(op, la)
    rec = averaged_recover(rho_ac, rule, [(rho_bc, lb)])
    rec = permute(rec, op.layout.labels)
    diff = rec.entries - op.entries
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())
