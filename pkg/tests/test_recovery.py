import math

import numpy as np
import pytest

from entlab.linop import (
    layout, operator, state, sample, tensor, partial_trace, partial_transpose,
    permute, SystemLayout, LabeledOperator,
)
from entlab.entropy import cqmi, markov_state
from entlab.measured import fidelity, trace_norm
from entlab.recovery import (
    beta0_rule, beta0_density, rotated_petz, averaged_recover,
    averaged_recover_decomposition, transpose_twirl_identity,
    gamma_construction, markov_recovery_deviation, QuadratureRule,
)


def random_block(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def test_beta0_rule_contract():
    rule = beta0_rule(201)
    assert abs(rule.weights.sum() - 1.0) <= 1e-12
    assert abs(beta0_density(0.0) - np.pi / 4) < 1e-15
    # symmetric nodes with equal weights
    assert np.allclose(rule.nodes, -rule.nodes[::-1])
    assert np.allclose(rule.weights, rule.weights[::-1])
    # odd moments vanish
    assert abs((rule.weights * rule.nodes).sum()) <= 1e-12
    with pytest.raises(Exception):
        beta0_rule(200)

    # second moment is 1/3 for this density; refinement agreement
    m2_201 = (rule.weights * rule.nodes ** 2).sum()
    rule4 = beta0_rule(401)
    m2_401 = (rule4.weights * rule4.nodes ** 2).sum()
    assert abs(m2_201 - 1.0 / 3.0) < 1e-8
    assert abs(m2_201 - m2_401) < 1e-10

    # oscillatory integrands converge at the node counts used by the checks
    for c in (5.0, 15.0, 25.0):
        v1 = (rule.weights * np.cos(c * rule.nodes)).sum()
        v2 = (rule4.weights * np.cos(c * rule4.nodes)).sum()
        assert abs(v1 - v2) < 1e-9


def test_rotated_petz_product_anchor():
    ra = sample("ginibre_state", layout(A=2), seed=0)
    rb = sample("ginibre_state", layout(Ab=2), seed=1)
    anchor = state(np.kron(ra.entries, rb.entries), layout(A=2, Ab=2))
    x = sample("ginibre_state", layout(Ab=2), seed=2)
    for t in (0.0, 0.7):
        rmap = rotated_petz(anchor, "A", t)
        out = rmap.apply(x.op)
        expect = np.kron(ra.entries, x.entries)
        assert np.abs(out.entries - expect).max() < 1e-11


def test_rotated_petz_cp_tp():
    rule = beta0_rule(21)
    for seed in range(5):
        anchor = sample("ginibre_state", layout(F=2, K=2), seed=10 + seed)
        for t in (0.0, 0.9, -2.2):
            rmap = rotated_petz(anchor, "F", t)
            choi = rmap.choi()
            assert np.linalg.eigvalsh(choi).min() >= -1e-9
            x = sample("ginibre_state", layout(K=2), seed=100 + seed)
            out = rmap.apply(x.op)
            assert abs(out.trace().real - 1.0) <= 1e-10


def test_markov_recovery_exact_per_node_and_averaged():
    rng = np.random.default_rng(3)
    blocks = [((random_block(rng, 4), (2, 2)), (random_block(rng, 4), (2, 2)))]
    st, _ = markov_state([1.0], blocks)
    assert cqmi(st, "A", "B", "C") <= 1e-9

    rho_ac = partial_trace(st.op, "B")
    rho_bc = partial_trace(st.op, "A")
    for t in (0.0, 1.3):
        rmap = rotated_petz(rho_bc, "B", t)
        rec = permute(rmap.apply(rho_ac), st.layout.labels)
        assert np.abs(rec.entries - st.entries).max() < 1e-11

    rule = beta0_rule(201)
    assert markov_recovery_deviation(st, rule) <= 1e-8

    # two-block Markov state
    blocks = [((random_block(rng, 4), (2, 2)), (random_block(rng, 4), (2, 2))),
              ((random_block(rng, 2), (2, 1)), (random_block(rng, 2), (1, 2)))]
    st2, _ = markov_state([0.3, 0.7], blocks)
    assert cqmi(st2, "A", "B", "C") <= 1e-9
    assert markov_recovery_deviation(st2, rule) <= 1e-8


def test_averaged_recover_trace_and_refinement():
    rho = sample("ginibre_state", layout(A=2, B=2, C=2), seed=4)
    rho_ac = partial_trace(rho.op, "B")
    rho_bc = partial_trace(rho.op, "A")
    out1 = averaged_recover(rho_ac, beta0_rule(201), [(rho_bc, "B")])
    assert abs(out1.trace().real - 1.0) <= 1e-9
    out2 = averaged_recover(rho_ac, beta0_rule(401), [(rho_bc, "B")])
    diff = permute(out1, out2.layout.labels).entries - out2.entries
    assert trace_norm(diff) <= 1e-9


def test_averaged_recover_tensor_order_invariance():
    rho = sample("ginibre_state", layout(A=2, Ab=2, B=2, Bb=2), seed=5)
    rho_abar = partial_trace(rho.op, ("B", "Bb"))    # on (A, Ab)
    rho_bbar = partial_trace(rho.op, ("A", "Ab"))    # on (B, Bb)
    inner = partial_trace(rho.op, ("A", "B"))        # on (Ab, Bb)
    rule = beta0_rule(41)
    out_ab = averaged_recover(inner, rule, [(rho_abar, "A"), (rho_bbar, "B")])
    out_ba = averaged_recover(inner, rule, [(rho_bbar, "B"), (rho_abar, "A")])
    assert np.abs(permute(out_ab, out_ba.layout.labels).entries
                  - out_ba.entries).max() <= 1e-12


def test_transpose_twirl_identity():
    anchor_real = state(np.real(sample("ginibre_state",
                                       layout(B=2, Bb=2), seed=6).entries)
                        / np.trace(np.real(sample("ginibre_state",
                                                  layout(B=2, Bb=2),
                                                  seed=6).entries)).real,
                        layout(B=2, Bb=2))
    assert transpose_twirl_identity(anchor_real, "B", 0.0) < 1e-13

    for seed in range(5):
        anchor = sample("ginibre_state", layout(B=2, Bb=2), seed=20 + seed)
        for t in (0.0, 0.7, -1.1):
            assert transpose_twirl_identity(anchor, "B", t) <= 1e-9


def test_recovered_state_inherits_ppt():
    # gamma = avg (R_A (x) R_B)(sigma) stays PPT when sigma is PPT
    rho = sample("ginibre_state", layout(A=2, Ab=2, B=2, Bb=2), seed=30)
    sigma = sample("ppt_state", layout(Ab=2, Bb=2), seed=31,
                   cut=(("Ab",), ("Bb",)))
    rho_abar = partial_trace(rho.op, ("B", "Bb"))
    rho_bbar = partial_trace(rho.op, ("A", "Ab"))
    rule = beta0_rule(61)
    gamma = averaged_recover(sigma.op, rule, [(rho_abar, "A"), (rho_bbar, "B")])
    gamma = permute(gamma, ("A", "Ab", "B", "Bb"))
    assert abs(gamma.trace().real - 1.0) < 1e-9
    pt = partial_transpose(gamma, ("B", "Bb"))
    assert np.linalg.eigvalsh(pt.entries).min() >= -1e-9


def test_averaged_recover_decomposition_certificate():
    sep = sample("separable_mixture", layout(Ab=2, Bb=2), seed=32, terms=3,
                 partition=(("Ab",), ("Bb",)))
    rho = sample("ginibre_state", layout(A=2, Ab=2, B=2, Bb=2), seed=33)
    rho_abar = partial_trace(rho.op, ("B", "Bb"))
    rho_bbar = partial_trace(rho.op, ("A", "Ab"))
    rule = beta0_rule(41)
    gamma, dec = averaged_recover_decomposition(
        sep, rule, [(rho_abar, "A"), (rho_bbar, "B")],
        (("A", "Ab"), ("B", "Bb")))
    # certificate reassembles to the returned operator
    assert np.abs(dec.assemble().entries - gamma.entries / gamma.trace().real).max() <= 1e-10
    direct = averaged_recover(sep.assemble(), rule,
                              [(rho_abar, "A"), (rho_bbar, "B")])
    assert np.abs(permute(direct, gamma.layout.labels).entries
                  - gamma.entries).max() <= 1e-10


def test_gamma_construction():
    rng = np.random.default_rng(7)
    rule = beta0_rule(61)
    lay = layout(A=2, B=2, C=2)
    rho = sample("ginibre_state", lay, seed=34)
    sep = sample("separable_mixture", layout(A=2, C=2), seed=35, terms=3,
                 partition=(("A",), ("C",)))
    # CQ operator on (A, B): F blocks + computational projectors on B
    f0 = random_block(rng, 2) + 0.5 * np.eye(2)
    f1 = random_block(rng, 2) + 0.5 * np.eye(2)
    x_cq = [(f0, np.diag([1.0, 0.0]).astype(complex)),
            (f1, np.diag([0.0, 1.0]).astype(complex))]
    out = gamma_construction(rho, sep, x_cq, rule)

    assert abs(out.gamma_hat_ac.trace().real - 1.0) <= 1e-9
    assert np.abs(out.gamma_ab_decomposition.assemble().entries
                  - out.gamma_ab.entries / out.gamma_ab.trace().real).max() <= 1e-9
    assert np.abs(out.gamma_hat_decomposition.assemble().entries
                  - out.gamma_hat_ac.entries).max() <= 1e-9

    # cross-term oracle: assemble one node's hat-state contribution with the
    # explicit double x, x' sum (no orthogonality shortcut) and compare with
    # the diagonal-only fast path
    rho_bc = partial_trace(rho.op, "A")
    ti = rule.nodes[17]
    rmap = rotated_petz(rho_bc, "B", ti)

    def fpow(f, z):
        w_, v_ = np.linalg.eigh(f)
        return (v_ * np.exp(z * np.log(w_))) @ v_.conj().T

    vec_cq = [(x_cq[0][0], np.array([1.0, 0.0])),
              (x_cq[1][0], np.array([0.0, 1.0]))]
    slow = np.zeros((4, 4), dtype=complex)
    fast = np.zeros((4, 4), dtype=complex)
    for wk, vecs in zip(sep.weights, sep.vectors):
        a_vec, c_vec = vecs
        rec = rmap.apply_matrix(np.outer(c_vec, c_vec.conj())).reshape(2, 2, 2, 2)
        proj_a = np.outer(a_vec, a_vec.conj())
        for xi, (fi, pi) in enumerate(vec_cq):
            for xj, (fj, pj) in enumerate(vec_cq):
                # tr_B[(P_i (x) 1) rec (P_j (x) 1)] carries <p_j|p_i> from
                # the trace, on top of the sandwiched C block
                c_fac = complex(pj.conj() @ pi) * np.einsum(
                    "i,ikjl,j->kl", pi.conj(), rec, pj)
                a_fac = fpow(fi, (1 + 1j * ti) / 2) @ proj_a @ \
                    fpow(fj, (1 - 1j * ti) / 2)
                slow += wk * np.kron(a_fac, c_fac)
                if xi == xj:
                    fast += wk * np.kron(a_fac, c_fac)
    assert np.abs(slow - fast).max() <= 1e-12


def test_gamma_construction_product_case():
    rule = beta0_rule(41)
    ra = sample("ginibre_state", layout(A=2), seed=36)
    rb = sample("ginibre_state", layout(B=2), seed=37)
    rc = sample("ginibre_state", layout(C=2), seed=38)
    rho = state(np.kron(np.kron(ra.entries, rb.entries), rc.entries),
                layout(A=2, B=2, C=2))
    from entlab.linop import SeparableDecomposition
    # single-term sigma: product of marginal eigenvectors
    wa, va = np.linalg.eigh(ra.entries)
    wc, vc = np.linalg.eigh(rc.entries)
    sep = SeparableDecomposition(
        (("A",), ("C",)), np.array([1.0]),
        ((va[:, -1], vc[:, -1]),), layout(A=2, C=2))
    x_cq = [(np.eye(2), np.diag([1.0, 0.0]).astype(complex)),
            (np.eye(2), np.diag([0.0, 1.0]).astype(complex))]
    out = gamma_construction(rho, sep, x_cq, rule)
    assert abs(out.gamma_hat_ac.trace().real - 1.0) <= 1e-9
    assert out.gamma_hat_decomposition.term_count >= 1


def test_markov_anchor_gamma_separability():
    rng = np.random.default_rng(8)
    blocks = [((random_block(rng, 4), (2, 2)), (random_block(rng, 4), (2, 2)))]
    st, _ = markov_state([1.0], blocks, labels=("A", "C", "B"))
    rho = state(permute(st.op, ("A", "B", "C")).entries,
                SystemLayout(("A", "B", "C"),
                             permute(st.op, ("A", "B", "C")).layout.dims))
    rho_a = partial_trace(rho.op, ("B", "C"))
    rho_c = partial_trace(rho.op, ("A", "B"))
    from entlab.linop import SeparableDecomposition, decompose_product_mixture
    sep = decompose_product_mixture(
        [1.0], [[rho_a.entries, rho_c.entries]], (("A",), ("C",)),
        layout(A=2, C=4))
    x_cq = [(np.eye(2), np.diag(e).astype(complex)) for e in np.eye(2)]
    out = gamma_construction(rho, sep, x_cq, beta0_rule(41),
                             labels=("A", "B", "C"))
    assert abs(out.gamma_hat_ac.trace().real - 1.0) <= 1e-9
    assert np.abs(out.gamma_hat_decomposition.assemble().entries
                  - out.gamma_hat_ac.entries).max() <= 1e-9
