import numpy as np
import pytest

from entlab import linop
from entlab.linop import (
    LayoutError, ParameterError, SystemLayout, layout, operator, state,
    tensor, partial_trace, partial_transpose, spectral, matfun, pinch,
    sample, embed, permute, rng_for, distinct_spectrum_count,
)


def randh(rng, d, scale=1.0):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / 2


def bell_state():
    v = np.zeros(4)
    v[0] = v[3] = 1 / np.sqrt(2)
    return state(np.outer(v, v), layout(A=2, B=2))


def test_layout_validation():
    with pytest.raises(LayoutError):
        SystemLayout(("A", "A"), (2, 2))
    with pytest.raises(LayoutError):
        SystemLayout(("A",), (0,))
    lay = layout(A=2, B=3)
    assert lay.dim == 6
    assert lay.dims_of("B") == (3,)
    with pytest.raises(LayoutError):
        lay.positions("Z")


def test_tensor_identity_and_trace():
    i2 = operator(np.eye(2), layout(A=2), hermitian=True)
    j2 = operator(np.eye(2), layout(B=2), hermitian=True)
    out = tensor(i2, j2)
    assert np.allclose(out.entries, np.eye(4))
    rng = np.random.default_rng(0)
    a = operator(randh(rng, 2), layout(A=2), hermitian=True)
    b = operator(randh(rng, 2), layout(B=2), hermitian=True)
    assert np.isclose(tensor(a, b).trace(), a.trace() * b.trace())
    with pytest.raises(LayoutError):
        tensor(a, operator(np.eye(2), layout(A=2)))


def test_tensor_matches_index_loop_oracle():
    rng = np.random.default_rng(1)
    a = randh(rng, 2)
    b = randh(rng, 3)
    out = tensor(operator(a, layout(A=2), hermitian=True),
                 operator(b, layout(B=3), hermitian=True)).entries
    # four-index loop oracle
    expect = np.zeros((6, 6), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(3):
                for l in range(3):
                    expect[i * 3 + k, j * 3 + l] = a[i, j] * b[k, l]
    assert np.abs(out - expect).max() < 1e-14


def test_partial_trace_cases():
    bell = bell_state()
    mb = partial_trace(bell.op, "B")
    assert np.abs(mb.entries - np.eye(2) / 2).max() < 1e-12

    rng = np.random.default_rng(2)
    ra = randh(rng, 2) + 2 * np.eye(2)
    rb = randh(rng, 2) + 2 * np.eye(2)
    ra /= np.trace(ra).real
    rb /= np.trace(rb).real
    prod = tensor(operator(ra, layout(A=2), hermitian=True),
                  operator(rb, layout(B=2), hermitian=True))
    assert np.abs(partial_trace(prod, "B").entries - ra).max() < 1e-12
    with pytest.raises(LayoutError):
        partial_trace(prod, "Z")


def test_partial_trace_matches_loop_oracle():
    lay = layout(A=2, B=2, C=2)
    rho = sample("ginibre_state", lay, seed=3)
    got = partial_trace(rho.op, ["B"]).entries
    t = rho.entries.reshape(2, 2, 2, 2, 2, 2)
    expect = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for c in range(2):
            for a2 in range(2):
                for c2 in range(2):
                    for b in range(2):
                        expect[a * 2 + c, a2 * 2 + c2] += t[a, b, c, a2, b, c2]
    assert np.abs(got - expect).max() <= 1e-13


def test_partial_transpose_bell_spectrum_and_involution():
    bell = bell_state()
    pt = partial_transpose(bell.op, "B")
    w = np.sort(np.linalg.eigvalsh(pt.entries))
    assert np.allclose(w, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)
    back = partial_transpose(pt, "B")
    assert np.abs(back.entries - bell.entries).max() < 1e-14

    rng = np.random.default_rng(4)
    ra = randh(rng, 2) + 2 * np.eye(2)
    rb = randh(rng, 2) + 2 * np.eye(2)
    prod = tensor(operator(ra, layout(A=2), hermitian=True),
                  operator(rb, layout(B=2), hermitian=True))
    w = np.linalg.eigvalsh(partial_transpose(prod, "B").entries)
    assert w.min() > 0


def test_spectral_and_reconstruction():
    z = operator(np.diag([1.0, -1.0]), layout(A=2), hermitian=True)
    w, _ = spectral(z)
    assert np.allclose(w, [-1.0, 1.0])
    rng = np.random.default_rng(5)
    h = operator(randh(rng, 8), layout(A=8), hermitian=True)
    w, v = spectral(h)
    assert np.abs((v * w) @ v.conj().T - h.entries).max() <= 1e-11 * max(np.abs(w).max(), 1)
    with pytest.raises(linop.DomainError):
        spectral(operator(np.array([[0, 1], [0, 0]]), layout(A=2)))


def test_spectrum_of_tensor_product_is_pairwise_products():
    rho = sample("ginibre_state", layout(A=2), seed=6)
    sig = sample("ginibre_state", layout(B=3), seed=7)
    w = np.sort(np.linalg.eigvalsh(tensor(rho.op, sig.op).entries))
    wa = np.linalg.eigvalsh(rho.entries)
    wb = np.linalg.eigvalsh(sig.entries)
    expect = np.sort(np.outer(wa, wb).ravel())
    assert np.abs(w - expect).max() < 1e-12


def test_matfun_sqrt_unitary_covariance_and_complex_power():
    rho = sample("ginibre_state", layout(A=4), seed=8)
    root = matfun(rho.op, "power", 0.5)
    assert np.abs(root.entries @ root.entries - rho.entries).max() < 1e-11

    rng = np.random.default_rng(9)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u, _ = np.linalg.qr(g)
    rot = operator(u @ rho.entries @ u.conj().T, layout(A=4), hermitian=True)
    lhs = matfun(rot, "log").entries
    rhs = u @ matfun(rho.op, "log").entries @ u.conj().T
    assert np.abs(lhs - rhs).max() < 1e-10

    for t in (0.0, 0.7, -1.3):
        p = matfun(rho.op, "power", (1 + 1j * t) / 2)
        sv = np.linalg.svd(p.entries, compute_uv=False)
        lam = np.sort(np.linalg.eigvalsh(rho.entries))
        assert np.abs(np.sort(sv) - np.sqrt(lam)).max() < 1e-11

    with pytest.raises(linop.DomainError):
        matfun(operator(np.diag([1.0, -0.5]), layout(A=2), hermitian=True), "log")


def test_matfun_exp_log_roundtrip():
    rho = sample("ginibre_state", layout(A=4), seed=10)
    back = matfun(matfun(rho.op, "log"), "exp")
    assert np.abs(back.entries - rho.entries).max() < 1e-10


def test_pinch_properties():
    rng = np.random.default_rng(11)
    lay = layout(A=3)
    x = operator(randh(rng, 3), lay, hermitian=True)
    basis = operator(np.diag([0.1, 0.5, 0.9]), lay, hermitian=True)
    pinched = pinch(x, basis)
    assert np.abs(pinched.entries - np.diag(np.diag(x.entries))).max() < 1e-12

    ident = operator(np.eye(3), lay, hermitian=True)
    assert np.abs(pinch(x, ident).entries - x.entries).max() < 1e-12

    # trace preservation, positivity, idempotence
    rho = sample("ginibre_state", lay, seed=12)
    basis = operator(randh(rng, 3), lay, hermitian=True)
    p1 = pinch(rho.op, basis)
    assert abs(p1.trace().real - 1) < 1e-12
    assert np.linalg.eigvalsh(p1.entries).min() > -1e-12
    p2 = pinch(p1, basis)
    assert np.abs(p2.entries - p1.entries).max() < 1e-12


def test_distinct_spectrum_count_two_copies():
    sig = state(np.diag([0.7, 0.3]), layout(A=2))
    two = tensor(operator(sig.entries, layout(A1=2), hermitian=True),
                 operator(sig.entries, layout(A2=2), hermitian=True))
    assert distinct_spectrum_count(two) == 3


def test_sampler_determinism_and_kinds():
    lay = layout(A=2, B=2)
    a = sample("ginibre_state", lay, seed=13)
    b = sample("ginibre_state", lay, seed=13)
    assert np.array_equal(a.entries, b.entries)
    c = sample("ginibre_state", lay, seed=14)
    assert not np.array_equal(a.entries, c.entries)

    full = sample("ginibre_state", lay, seed=15)
    assert np.linalg.eigvalsh(full.entries).min() > 0

    with pytest.raises(ParameterError):
        sample("ginibre_state", lay, seed=16, rank=9)

    pure = sample("haar_pure", lay, seed=17)
    w = np.linalg.eigvalsh(pure.entries)
    assert abs(w[-1] - 1.0) < 1e-12

    sep = sample("separable_mixture", lay, seed=18, terms=3)
    st = sep.as_state()
    assert abs(np.trace(st.entries).real - 1) < 1e-10
    assert np.abs(sep.assemble().entries - st.entries).max() < 1e-12

    ppt = sample("ppt_state", lay, seed=19, cut=(("A",), ("B",)))
    pt = partial_transpose(ppt.op, "B")
    assert np.linalg.eigvalsh(pt.entries).min() >= -1e-12


def test_extension_sampler_marginalizes_back():
    lay = layout(A=2, B=2)
    rho = sample("ginibre_state", lay, seed=20)
    ext = sample("extension_of", lay, seed=21, of=rho, dim=1, label="C")
    back = partial_trace(ext.op, "C")
    assert np.abs(back.entries - rho.entries).max() < 1e-12

    ext2 = sample("extension_of", lay, seed=22, of=rho, dim=3, label="C")
    back2 = partial_trace(ext2.op, "C")
    assert np.abs(back2.entries - rho.entries).max() < 1e-10
    assert ext2.layout.labels == ("A", "B", "C")


def test_one_way_channel_is_trace_preserving():
    lay = layout(A=2, B=2)
    chan = sample("one_way_locc_channel", lay, seed=23, branches=2)
    rho = sample("ginibre_state", lay, seed=24)
    out = chan.apply(rho.op)
    assert abs(out.trace().real - 1.0) < 1e-10
    assert np.linalg.eigvalsh(out.entries).min() > -1e-12


def test_partial_trace_tensor_recovers_factors():
    rng = np.random.default_rng(25)
    for da, db in [(2, 2), (2, 3), (3, 4)]:
        a = randh(rng, da) + da * np.eye(da)
        b = randh(rng, db) + db * np.eye(db)
        pa = operator(a, layout(A=da), hermitian=True)
        pb = operator(b, layout(B=db), hermitian=True)
        prod = tensor(pa, pb)
        got = partial_trace(prod, "B").entries
        assert np.abs(got - a * np.trace(b).real).max() <= 1e-12 * db * np.abs(a).max() * 10


def test_partial_transpose_commutes_with_partial_trace():
    lay = layout(A=2, B=2, C=2)
    rho = sample("ginibre_state", lay, seed=26)
    x = partial_trace(partial_transpose(rho.op, "A"), "C")
    y = partial_transpose(partial_trace(rho.op, "C"), "A")
    assert np.abs(x.entries - y.entries).max() < 1e-13


def test_embed_and_permute():
    lay = layout(A=2, B=3, C=2)
    rng = np.random.default_rng(27)
    x = operator(randh(rng, 4), layout(A=2, C=2), hermitian=True)
    big = embed(x, lay)
    assert big.layout.labels == ("A", "B", "C")
    # contracting B back recovers 3x the original
    back = partial_trace(big, "B")
    assert np.abs(back.entries - 3 * permute(x, ("A", "C")).entries).max() < 1e-12


def test_json_roundtrip(tmp_path):
    lay = layout(A=2, B=2)
    rho = sample("ginibre_state", lay, seed=28)
    path = tmp_path / "op.json"
    digest1 = linop.save_operator(rho.op, path)
    loaded = linop.load_operator(path, hermitian=True)
    assert loaded.layout == lay
    assert np.abs(loaded.entries - rho.entries).max() < 1e-15
    digest2 = linop.save_operator(loaded, tmp_path / "op2.json")
    assert digest1 == digest2


def test_rng_for_is_tag_sensitive():
    a = rng_for(1, "x").normal()
    b = rng_for(1, "x").normal()
    c = rng_for(1, "y").normal()
    assert a == b and a != c
