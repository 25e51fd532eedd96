import math

import numpy as np
import pytest

from entlab.linop import layout, operator, state, sample, partial_transpose
from entlab.entropy import umegaki
from entlab import measured
from entlab.measured import (
    kl, d_all, d_pinch, d_locc1, d_lo, cone_bound, restricted_fid_norm,
    fidelity, trace_norm, pushback_value, KLObjective,
    _povm_from_rows, _povm_rows_gradient, _joint_pmfs, _initial_rows,
)

from oracles import bloch_grid_kl, classical_kl


def two_states(seed, d=4):
    lay = layout(A=2, B=d // 2) if d in (2, 4) else layout(A=d)
    if d == 2:
        lay = layout(A=2)
    return (sample("ginibre_state", lay, seed=seed),
            sample("ginibre_state", lay, seed=seed + 5000))


def test_kl_basics():
    p = np.array([0.5, 0.5])
    assert kl(p, p) == 0.0
    assert abs(kl(np.array([1.0, 0.0]), p) - math.log(2)) < 1e-14
    assert kl(p, np.array([1.0, 0.0])) == math.inf


def test_d_all_self_and_commuting():
    rho, _ = two_states(0, 2)
    v = d_all(rho, rho)
    assert abs(v.value) < 1e-9

    p = np.array([0.5, 0.3, 0.2])
    q = np.array([0.2, 0.5, 0.3])
    dp = state(np.diag(p), layout(A=3))
    dq = state(np.diag(q), layout(A=3))
    v = d_all(dp, dq)
    assert abs(v.value - classical_kl(p, q)) <= 1e-6
    assert abs(v.value - float(umegaki(dp, dq))) <= 1e-6


def test_d_all_vs_bloch_grid():
    for seed in range(6):
        rho, sig = two_states(10 + seed, 2)
        v = d_all(rho, sig)
        grid = bloch_grid_kl(rho.entries, sig.entries)
        assert v.value >= grid - 1e-9  # grid is a feasible subset
        assert abs(v.value - grid) <= 1e-4
        assert v.value <= float(umegaki(rho, sig)) + 1e-8


def test_d_all_witness_reevaluates_and_trace_monotone():
    rho, sig = two_states(30, 4)
    v = d_all(rho, sig)
    pmf_p = v.witness.born(rho)
    pmf_q = v.witness.born(sig)
    assert abs(kl(pmf_p / pmf_p.sum(), pmf_q / pmf_q.sum()) - v.value) <= 1e-9
    v.witness.check(1e-9)
    trace = v.diagnostics["trace"]
    assert all(trace[i + 1] >= trace[i] - 1e-12 for i in range(len(trace) - 1))
    assert v.diagnostics["gap"] <= 1e-6


def test_d_all_support_violation():
    p0 = state(np.diag([1.0, 0.0]), layout(A=2))
    p1 = state(np.diag([0.0, 1.0]), layout(A=2))
    assert d_all(p0, p1).value == math.inf


def test_d_pinch_cases():
    # commuting pair: pinching is lossless
    p = np.array([0.6, 0.4])
    q = np.array([0.3, 0.7])
    dp = state(np.diag(p), layout(A=2))
    dq = state(np.diag(q), layout(A=2))
    assert abs(d_pinch(dp, dq).value - classical_kl(p, q)) < 1e-12

    # maximally mixed reference: single eigenvalue cluster, value equals D
    rho, _ = two_states(40, 4)
    pi = state(np.eye(4) / 4, rho.layout)
    v = d_pinch(rho, pi)
    assert abs(v.value - float(umegaki(rho, pi))) < 1e-10
    assert v.diagnostics["distinct_spectrum"] == 1


def test_d_pinch_two_copy_sandwich():
    rho1, sig1 = two_states(50, 2)
    lay = layout(A1=2, A2=2)
    rho = state(np.kron(rho1.entries, rho1.entries), lay)
    sig = state(np.kron(sig1.entries, sig1.entries), lay)
    v = d_pinch(rho, sig)
    dv = float(umegaki(rho, sig))
    nspec = v.diagnostics["distinct_spectrum"]
    assert dv - math.log(nspec) <= v.value + 1e-10
    assert v.value <= dv + 1e-10


def test_povm_rows_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    da, db, n = 2, 2, 4
    rho, sig = two_states(60, 4)
    projs = [np.outer(v, v.conj()) for v in np.eye(2)]
    from entlab.measured import _cond_contract
    cond_r = [_cond_contract(rho.entries, da, db, projs, False)] * n
    cond_s = [_cond_contract(sig.entries, da, db, projs, False)] * n

    L = _initial_rows(rng, n, da, "random")

    def value(Lc):
        povm = _povm_from_rows(Lc)
        p, q = _joint_pmfs(povm, cond_r, cond_s)
        return float(sum(KLObjective.phi(px, qx).sum() for px, qx in zip(p, q)))

    povm = _povm_from_rows(L)
    p, q = _joint_pmfs(povm, cond_r, cond_s)
    grads_q = []
    for x in range(n):
        dp, dq = KLObjective.dphi(p[x], q[x])
        G = sum(dp[z] * cond_r[x][z] + dq[z] * cond_s[x][z] for z in range(db))
        grads_q.append((G + G.conj().T) / 2)
    dL = _povm_rows_gradient(L, grads_q)

    eps = 1e-6
    for x in (0, 2):
        for j in range(da):
            for part in (1.0, 1j):
                Lp = L.copy()
                Lp[x, j] += eps * part
                Lm = L.copy()
                Lm[x, j] -= eps * part
                fd = (value(Lp) - value(Lm)) / (2 * eps)
                # dL holds d/d(conj l): df = 2 Re[dL . conj(dl)]
                analytic = 2 * np.real(dL[x, j] * np.conj(part))
                assert abs(fd - analytic) < 1e-5 * max(1.0, abs(fd))


def test_d_locc1_basics():
    rho, sig = two_states(70, 4)
    v0 = d_locc1(rho, rho, cut=(("A",), ("B",)), restarts=2, seed=1)
    assert abs(v0.value) < 1e-8

    # diagonal pair in a product basis reduces to the classical KL
    rng = np.random.default_rng(4)
    p = rng.dirichlet(np.ones(4))
    q = rng.dirichlet(np.ones(4))
    dp = state(np.diag(p), layout(A=2, B=2))
    dq = state(np.diag(q), layout(A=2, B=2))
    v = d_locc1(dp, dq, cut=(("A",), ("B",)), restarts=4, seed=2)
    assert abs(v.value - classical_kl(p, q)) <= 1e-6

    # witness re-evaluates via Born pmfs
    pmf_p = v.witness.born(dp)
    pmf_q = v.witness.born(dq)
    assert abs(kl(pmf_p / pmf_p.sum(), pmf_q / pmf_q.sum()) - v.value) < 1e-9
    v.witness.check(1e-8)


def test_measured_ordering_chain():
    for seed in range(4):
        rho, sig = two_states(80 + seed, 4)
        cut = (("A",), ("B",))
        lo = d_lo(rho, sig, cut=cut, restarts=4, seed=3)
        locc = d_locc1(rho, sig, cut=cut, restarts=4, seed=3,
                       extra_starts=None)
        allv = d_all(rho, sig)
        assert lo.value <= locc.value + 1e-6
        assert locc.value <= allv.value + 1e-6


def test_d_lo_classical_and_unitary_covariance():
    rng = np.random.default_rng(6)
    p = rng.dirichlet(np.ones(4))
    q = rng.dirichlet(np.ones(4))
    dp = state(np.diag(p), layout(A=2, B=2))
    dq = state(np.diag(q), layout(A=2, B=2))
    v = d_lo(dp, dq, cut=(("A",), ("B",)), restarts=4, seed=5)
    assert abs(v.value - classical_kl(p, q)) <= 1e-6

    rho, sig = two_states(90, 4)
    ua, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    ub, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    u = np.kron(ua, ub)
    rot = lambda s: state(u @ s.entries @ u.conj().T, s.layout)
    v1 = d_lo(rho, sig, cut=(("A",), ("B",)), restarts=6, seed=7)
    v2 = d_lo(rot(rho), rot(sig), cut=(("A",), ("B",)), restarts=6, seed=7)
    assert abs(v1.value - v2.value) <= 1e-5


def test_cone_bound_cases():
    # commuting separable pair: classical optimizer is feasible
    rng = np.random.default_rng(8)
    p = rng.dirichlet(np.ones(4))
    q = rng.dirichlet(np.ones(4))
    dp = state(np.diag(p), layout(A=2, B=2))
    dq = state(np.diag(q), layout(A=2, B=2))
    for cone in ("SEPP", "PPT"):
        v = cone_bound(dp, dq, cone, cut=(("A",), ("B",)), seed=9)
        assert v.value >= classical_kl(p, q) - 1e-6

    rho, sig = two_states(100, 4)
    for cone in ("SEPP", "PPT"):
        v0 = cone_bound(rho, rho, cone, cut=(("A",), ("B",)), seed=10)
        assert abs(v0.value) <= 1e-6

    # upper bounds dominate the LO lower estimate
    lo = d_lo(rho, sig, cut=(("A",), ("B",)), restarts=4, seed=11)
    sep = cone_bound(rho, sig, "SEPP", cut=(("A",), ("B",)), seed=12)
    ppt = cone_bound(rho, sig, "PPT", cut=(("A",), ("B",)), seed=13)
    assert sep.value >= lo.value - 1e-6
    assert ppt.value >= lo.value - 1e-6
    # PPT witness certificate: partial transposes stay PSD
    for v in ppt.witness.certificate["pt_min_eigenvalues"].values():
        assert v >= -1e-9


def test_restricted_fid_norm():
    rho, sig = two_states(110, 4)
    f, n = restricted_fid_norm(rho, rho, "ALL")
    assert abs(f - 1.0) < 1e-10 and abs(n) < 1e-10

    v0 = state(np.diag([1.0, 0.0]), layout(A=2))
    v1 = state(np.diag([0.0, 1.0]), layout(A=2))
    f, n = restricted_fid_norm(v0, v1, "ALL")
    assert abs(f) < 1e-12 and abs(n - 2.0) < 1e-12

    f, n = restricted_fid_norm(rho, sig, "ALL")
    assert -math.log(f) <= d_all(rho, sig).value + 1e-6
    assert -math.log(f) >= n ** 2 / 4 - 1e-9

    for tag in ("LOCC1", "LO"):
        fr, nr = restricted_fid_norm(rho, sig, tag, cut=(("A",), ("B",)),
                                     restarts=3, seed=14)
        assert fr >= f - 1e-6          # restricted classes distinguish less
        assert nr <= n + 1e-6
        assert 0.0 <= fr <= 1.0 + 1e-9


def test_locc1_dpi_witness_pushback():
    lay = layout(A=2, B=2)
    rho = sample("ginibre_state", lay, seed=120)
    sig = sample("ginibre_state", lay, seed=121)
    chan = sample("one_way_locc_channel", lay, seed=122, branches=2)
    out_r = state(chan.apply(rho.op).entries, lay)
    out_s = state(chan.apply(sig.op).entries, lay)
    v_out = d_locc1(out_r, out_s, cut=(("A",), ("B",)), restarts=4, seed=15)
    v_pb = pushback_value(chan, v_out.witness, rho, sig)
    # pushed-back witness is an exact input-side measurement refining the
    # output statistics
    assert v_pb >= v_out.value - 1e-10
    v_in = d_locc1(rho, sig, cut=(("A",), ("B",)), restarts=6, seed=16)
    assert v_in.value >= v_out.value - 1e-4
