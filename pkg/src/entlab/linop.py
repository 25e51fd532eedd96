"""Dense Hermitian operator algebra on labeled tensor-product spaces.

All matrices are dense complex128 arrays indexed row-major over the ordered
subsystem labels of a :class:`SystemLayout`.  Everything here is a pure
function of its inputs; operators are immutable after construction.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

# Relative threshold below which eigenvalues are treated as zero
# (generalized inverse / log-on-support convention).
SUPPORT_RTOL = 1e-10
# Hermiticity validation tolerance, relative to the largest entry.
HERMITIAN_RTOL = 1e-12
# Full-rank samplers mix with this much completely mixed state so that
# divergences stay finite in sweeps.
GINIBRE_FLOOR = 1e-6


class LayoutError(ValueError):
    """Label bookkeeping violation (duplicate, unknown, or overlapping labels)."""


class ParameterError(ValueError):
    """Infeasible sampler or constructor parameters."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


def _as_labels(labels) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class SystemLayout:
    """Ordered subsystem labels with their local dimensions."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        labels = _as_labels(self.labels)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)
        if len(labels) != len(dims):
            raise LayoutError("labels and dims length mismatch")
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in {labels}")
        if any(d < 1 for d in dims):
            raise LayoutError(f"dimensions must be positive, got {dims}")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    def positions(self, labels) -> list[int]:
        labels = _as_labels(labels)
        missing = [l for l in labels if l not in self.labels]
        if missing:
            raise LayoutError(f"unknown labels {missing} in layout {self.labels}")
        return [self.labels.index(l) for l in labels]

    def dims_of(self, labels) -> tuple[int, ...]:
        return tuple(self.dims[p] for p in self.positions(labels))

    def dim_of(self, labels) -> int:
        return int(np.prod(self.dims_of(labels))) if _as_labels(labels) else 1

    def restrict(self, labels) -> "SystemLayout":
        """Sublayout of the given labels, keeping this layout's order."""
        keep = set(_as_labels(labels))
        missing = keep - set(self.labels)
        if missing:
            raise LayoutError(f"unknown labels {sorted(missing)}")
        pairs = [(l, d) for l, d in zip(self.labels, self.dims) if l in keep]
        return SystemLayout(tuple(l for l, _ in pairs), tuple(d for _, d in pairs))

    def without(self, labels) -> "SystemLayout":
        drop = set(_as_labels(labels))
        missing = drop - set(self.labels)
        if missing:
            raise LayoutError(f"unknown labels {sorted(missing)}")
        return self.restrict([l for l in self.labels if l not in drop])

    def concat(self, other: "SystemLayout") -> "SystemLayout":
        if set(self.labels) & set(other.labels):
            raise LayoutError("label sets overlap")
        return SystemLayout(self.labels + other.labels, self.dims + other.dims)


def layout(**dims) -> SystemLayout:
    """Shorthand: ``layout(A=2, B=2)`` (insertion order preserved)."""
    return SystemLayout(tuple(dims.keys()), tuple(dims.values()))


@dataclass(frozen=True)
class LabeledOperator:
    """Square complex matrix tagged with a subsystem layout."""

    layout: SystemLayout
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise LayoutError(f"entries must be square, got shape {m.shape}")
        if m.shape[0] != self.layout.dim:
            raise LayoutError(
                f"matrix size {m.shape[0]} does not match layout dim {self.layout.dim}")
        if self.hermitian:
            scale = max(np.abs(m).max(), 1.0)
            dev = np.abs(m - m.conj().T).max()
            if dev > HERMITIAN_RTOL * scale * 10:
                raise DomainError(f"operator tagged Hermitian deviates by {dev:.2e}")
            m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(self.layout, self.entries.conj().T, self.hermitian)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        m = self.entries
        return np.abs(m - m.conj().T).max() <= rtol * max(np.abs(m).max(), 1.0) * 10


def operator(entries, lay: SystemLayout, hermitian: bool = False) -> LabeledOperator:
    return LabeledOperator(lay, np.asarray(entries), hermitian)


@dataclass(frozen=True)
class QuantumState:
    """PSD unit-trace labeled operator."""

    op: LabeledOperator
    rank_tolerance: float = SUPPORT_RTOL

    def __post_init__(self):
        m = self.op.entries
        if not self.op.is_hermitian():
            raise DomainError("state matrix is not Hermitian")
        w = np.linalg.eigvalsh(m)
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise DomainError(f"state has negative eigenvalue {w.min():.2e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise DomainError(f"state trace {tr} deviates from 1")

    @property
    def layout(self) -> SystemLayout:
        return self.op.layout

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim


def state(entries, lay: SystemLayout) -> QuantumState:
    m = np.asarray(entries, dtype=np.complex128)
    m = (m + m.conj().T) / 2
    return QuantumState(LabeledOperator(lay, m, hermitian=True))


def _tensor_view(m: np.ndarray, dims) -> np.ndarray:
    return m.reshape(tuple(dims) + tuple(dims))


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product with concatenated layout."""
    lay = a.layout.concat(b.layout)
    return LabeledOperator(lay, np.kron(a.entries, b.entries),
                           a.hermitian and b.hermitian)


def partial_trace(x: LabeledOperator, drop) -> LabeledOperator:
    """Marginal obtained by tracing out the ``drop`` labels."""
    drop = _as_labels(drop)
    if not drop:
        return x
    pos = x.layout.positions(drop)
    dims = x.layout.dims
    n = len(dims)
    t = _tensor_view(x.entries, dims)
    for p in sorted(pos, reverse=True):
        t = np.trace(t, axis1=p, axis2=p + t.ndim // 2)
    kept = x.layout.without(drop)
    return LabeledOperator(kept, t.reshape(kept.dim, kept.dim), x.hermitian)


def partial_transpose(x: LabeledOperator, on) -> LabeledOperator:
    """Transpose the designated tensor factors."""
    on = _as_labels(on)
    pos = x.layout.positions(on)
    dims = x.layout.dims
    n = len(dims)
    t = _tensor_view(x.entries, dims)
    perm = list(range(2 * n))
    for p in pos:
        perm[p], perm[n + p] = perm[n + p], perm[p]
    out = t.transpose(perm).reshape(x.dim, x.dim)
    return LabeledOperator(x.layout, out, x.hermitian)


def permute(x: LabeledOperator, new_order) -> LabeledOperator:
    """Reorder the subsystem labels of ``x``."""
    new_order = _as_labels(new_order)
    if set(new_order) != set(x.layout.labels) or len(new_order) != len(x.layout.labels):
        raise LayoutError(f"{new_order} is not a permutation of {x.layout.labels}")
    pos = [x.layout.labels.index(l) for l in new_order]
    dims = x.layout.dims
    n = len(dims)
    t = _tensor_view(x.entries, dims)
    perm = pos + [n + p for p in pos]
    lay = SystemLayout(new_order, tuple(dims[p] for p in pos))
    return LabeledOperator(lay, t.transpose(perm).reshape(x.dim, x.dim), x.hermitian)


def embed(x: LabeledOperator, target: SystemLayout) -> LabeledOperator:
    """Extend ``x`` with identity factors to act on ``target``."""
    own = set(x.layout.labels)
    if not own <= set(target.labels):
        raise LayoutError(f"labels {own} not contained in target {target.labels}")
    for l in x.layout.labels:
        if target.restrict([l]).dims[0] != x.layout.restrict([l]).dims[0]:
            raise LayoutError(f"dimension mismatch for label {l}")
    rest = target.without(x.layout.labels)
    big = np.kron(x.entries, np.eye(rest.dim))
    lay = SystemLayout(x.layout.labels + rest.labels, x.layout.dims + rest.dims)
    return permute(LabeledOperator(lay, big, x.hermitian), target.labels)


def spectral(x: LabeledOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    if not x.is_hermitian():
        raise DomainError("spectral decomposition requires a Hermitian operator")
    w, v = np.linalg.eigh(x.entries)
    return w, v


def _support_mask(w: np.ndarray, rtol: float = SUPPORT_RTOL) -> np.ndarray:
    top = max(np.abs(w).max(), 0.0)
    return w > rtol * max(top, 1e-300)


def matfun(x: LabeledOperator, f, z: complex | None = None) -> LabeledOperator:
    """Apply a spectral function to a Hermitian (PSD for log/power) operator.

    ``f`` is one of ``"log"`` (log on support), ``"exp"``, or ``"power"``
    with complex exponent ``z``; the kernel of ``x`` maps to the kernel of
    the result for log and power.
    """
    w, v = spectral(x)
    if f == "exp":
        return LabeledOperator(x.layout, (v * np.exp(w)) @ v.conj().T, True)
    top = max(np.abs(w).max(), 0.0)
    if w.min() < -SUPPORT_RTOL * max(top, 1.0):
        raise DomainError(f"negative eigenvalue {w.min():.2e} for {f}")
    mask = _support_mask(w)
    wpos = np.where(mask, np.clip(w, 1e-300, None), 1.0)
    if f == "log":
        fw = np.where(mask, np.log(wpos), 0.0)
        out = (v * fw) @ v.conj().T
        return LabeledOperator(x.layout, (out + out.conj().T) / 2, True)
    if f == "power":
        if z is None:
            raise ParameterError("power requires an exponent")
        fw = np.where(mask, np.exp(z * np.log(wpos)), 0.0)
        out = (v * fw) @ v.conj().T
        herm = abs(complex(z).imag) < 1e-300
        return LabeledOperator(x.layout, out, herm and x.hermitian)
    raise ParameterError(f"unknown spectral function {f!r}")


def support_projector(x: LabeledOperator) -> LabeledOperator:
    w, v = spectral(x)
    mask = _support_mask(w)
    p = (v[:, mask]) @ (v[:, mask]).conj().T
    return LabeledOperator(x.layout, (p + p.conj().T) / 2, True)


def cluster_eigenvalues(w: np.ndarray, rtol: float = 1e-8) -> list[np.ndarray]:
    """Group ascending eigenvalues into clusters of relative gap below ``rtol``."""
    scale = max(np.abs(w).max(), 1e-300)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if abs(w[i] - w[groups[-1][-1]]) <= rtol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def pinch(x: LabeledOperator, basis_of: LabeledOperator,
          cluster_rtol: float = 1e-8) -> LabeledOperator:
    """Project ``x`` onto the eigenspaces of ``basis_of`` (sum of P x P)."""
    if x.layout != basis_of.layout:
        raise LayoutError("pinch requires operators on the same layout")
    w, v = spectral(basis_of)
    xt = v.conj().T @ x.entries @ v
    out = np.zeros_like(xt)
    for g in cluster_eigenvalues(w, cluster_rtol):
        out[np.ix_(g, g)] = xt[np.ix_(g, g)]
    return LabeledOperator(x.layout, v @ out @ v.conj().T, x.hermitian)


def distinct_spectrum_count(x: LabeledOperator, rtol: float = 1e-8) -> int:
    w, _ = spectral(x)
    return len(cluster_eigenvalues(w, rtol))


def dd_kernel(w: np.ndarray, fvals: np.ndarray, fprime: np.ndarray) -> np.ndarray:
    """First divided differences of a spectral function (Daleckii--Krein).

    Entry (i, j) is (f(w_i) - f(w_j)) / (w_i - w_j) with f'(w_i) on near-ties.
    """
    L, M = w[:, None], w[None, :]
    FL, FM = fvals[:, None], fvals[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (FL - FM) / (L - M)
    scale = max(np.abs(w).max(), 1e-300)
    near = np.abs(L - M) <= 1e-12 * scale
    K[near] = np.broadcast_to(fprime[:, None], K.shape)[near]
    return K


def log_frechet_adjoint(x_entries: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Apply the (self-adjoint) Frechet derivative of log at PSD ``x`` to
    ``direction``; kernel directions are projected out."""
    w, v = np.linalg.eigh(x_entries)
    mask = _support_mask(w)
    wp = np.where(mask, np.clip(w, 1e-300, None), 1.0)
    fvals = np.where(mask, np.log(wp), 0.0)
    fprime = np.where(mask, 1.0 / wp, 0.0)
    K = dd_kernel(np.where(mask, w, 0.0), fvals, fprime)
    K[~mask, :] = 0.0
    K[:, ~mask] = 0.0
    D = v.conj().T @ direction @ v
    return v @ (K * D) @ v.conj().T


# ---------------------------------------------------------------------------
# Separable decompositions

@dataclass(frozen=True)
class SeparableDecomposition:
    """Convex mixture of product pure states across a declared partition.

    ``vectors[k][g]`` is the unit vector of party ``g`` in term ``k``.
    """

    partition: tuple[tuple[str, ...], ...]
    weights: np.ndarray
    vectors: tuple[tuple[np.ndarray, ...], ...]
    layout: SystemLayout

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.vectors):
            raise ParameterError("weights and term count mismatch")
        if w.min() < -1e-12 or abs(w.sum() - 1.0) > 1e-9:
            raise ParameterError("weights must form a probability vector")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "partition",
                           tuple(_as_labels(g) for g in self.partition))

    @property
    def term_count(self) -> int:
        return len(self.weights)

    def assemble(self) -> LabeledOperator:
        """Reassemble the mixture as an operator on the declared layout."""
        groups = self.partition
        grouped_lay = SystemLayout(sum((g for g in groups), ()),
                                   sum((self.layout.dims_of(g) for g in groups), ()))
        total = np.zeros((self.layout.dim, self.layout.dim), dtype=complex)
        for wk, vecs in zip(self.weights, self.vectors):
            term = np.array([[1.0 + 0j]])
            for vec in vecs:
                term = np.kron(term, np.outer(vec, vec.conj()))
            op = LabeledOperator(grouped_lay, term, True)
            total += permute(op, self.layout.labels).entries * wk
        return LabeledOperator(self.layout, (total + total.conj().T) / 2, True)

    def as_state(self) -> QuantumState:
        return state(self.assemble().entries, self.layout)


def decompose_product_mixture(weights, factors, partition, lay) -> SeparableDecomposition:
    """Expand a mixture of product (possibly unnormalized) PSD factors into a
    pure product-state decomposition by eigendecomposing each factor.

    The result represents the normalized mixture; if the input already has
    unit trace the weights are unchanged up to rounding.
    """
    terms_w = []
    terms_v = []
    for wk, ops in zip(weights, factors):
        eigs = []
        for m in ops:
            w, v = np.linalg.eigh(np.asarray(m))
            keep = w > 1e-14 * max(w.max(), 1e-300)
            eigs.append([(w[i], v[:, i]) for i in np.where(keep)[0]])
        for combo in itertools.product(*[range(len(e)) for e in eigs]):
            p = wk
            vecs = []
            for g, i in enumerate(combo):
                lam, vi = eigs[g][i]
                p *= lam
                vecs.append(vi)
            if p > 1e-16:
                terms_w.append(p)
                terms_v.append(tuple(vecs))
    w = np.array(terms_w)
    return SeparableDecomposition(tuple(partition), w / w.sum(), tuple(terms_v), lay)


# ---------------------------------------------------------------------------
# Seeded sampling

def rng_for(seed: int, tag: str) -> np.random.Generator:
    """Counter-based generator derived from (seed, call tag); independent of
    thread scheduling."""
    h = hashlib.blake2b(f"{int(seed)}/{tag}".encode(), digest_size=16).digest()
    key = int.from_bytes(h, "little")
    return np.random.Generator(np.random.Philox(key=key))


def _ginibre(rng, d, k):
    return rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))


def _haar_isometry(rng, d_out, d_in):
    g = _ginibre(rng, d_out, d_in)
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@dataclass(frozen=True)
class OneWayChannel:
    """Channel of the form sum_k E_k (x) F_k: an instrument on the first cut
    side with a conditional channel on the second."""

    cut: tuple[tuple[str, ...], tuple[str, ...]]
    branches: tuple[tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]], ...]

    def apply(self, x: LabeledOperator) -> LabeledOperator:
        a, b = self.cut
        ordered = permute(x, a + b)
        da = ordered.layout.dim_of(a)
        db = ordered.layout.dim_of(b)
        out = np.zeros_like(ordered.entries)
        for akraus, bkraus in self.branches:
            for ka in akraus:
                for kb in bkraus:
                    K = np.kron(ka, kb)
                    out += K @ ordered.entries @ K.conj().T
        res = LabeledOperator(ordered.layout, out, x.hermitian)
        return permute(res, x.layout.labels)


def _random_kraus_set(rng, d, count):
    ops = [_ginibre(rng, d, d) for _ in range(count)]
    s = sum(k.conj().T @ k for k in ops)
    w, v = np.linalg.eigh(s)
    s_isqrt = (v * (1.0 / np.sqrt(np.clip(w, 1e-30, None)))) @ v.conj().T
    return [k @ s_isqrt for k in ops]


def sample(kind: str, lay: SystemLayout, seed: int, **params):
    """Deterministic sampler dispatch; identical (kind, layout, seed, params)
    give bitwise-identical output."""
    tag = f"{kind}|{','.join(lay.labels)}|{','.join(map(str, lay.dims))}|" + \
          ",".join(f"{k}={params[k]}" for k in sorted(params) if k not in ("of",))
    rng = rng_for(seed, tag)
    d = lay.dim

    if kind == "ginibre_state":
        rank = params.get("rank")
        if rank is None:
            rank = d
        rank = int(rank)
        if rank < 1 or rank > d:
            raise ParameterError(f"rank {rank} infeasible for dimension {d}")
        g = _ginibre(rng, d, rank)
        m = g @ g.conj().T
        m /= np.trace(m).real
        if rank == d:
            floor = params.get("floor", GINIBRE_FLOOR)
            m = (1 - floor) * m + floor * np.eye(d) / d
        return state(m, lay)

    if kind == "haar_pure":
        v = _ginibre(rng, d, 1)[:, 0]
        v /= np.linalg.norm(v)
        return state(np.outer(v, v.conj()), lay)

    if kind == "hermitian":
        scale = float(params.get("scale", 1.0))
        g = _ginibre(rng, d, d)
        return LabeledOperator(lay, scale * (g + g.conj().T) / 2, True)

    if kind == "separable_mixture":
        partition = params.get("partition")
        if partition is None:
            partition = tuple((l,) for l in lay.labels)
        partition = tuple(_as_labels(g) for g in partition)
        K = int(params.get("terms", params.get("K", 4)))
        if K < 1:
            raise ParameterError("term count must be positive")
        weights = rng.dirichlet(np.ones(K))
        vectors = []
        for _ in range(K):
            vecs = []
            for g in partition:
                dg = lay.dim_of(g)
                v = _ginibre(rng, dg, 1)[:, 0]
                vecs.append(v / np.linalg.norm(v))
            vectors.append(tuple(vecs))
        return SeparableDecomposition(partition, weights, tuple(vectors), lay)

    if kind == "ppt_state":
        cut = params.get("cut")
        if cut is None:
            cut = (lay.labels[:1], lay.labels[1:])
        g = _ginibre(rng, d, d)
        m = g @ g.conj().T
        m /= np.trace(m).real
        rho = LabeledOperator(lay, m, True)
        pt = partial_transpose(rho, cut[1])
        mineig = np.linalg.eigvalsh(pt.entries).min()
        if mineig < 0:
            # mix toward the completely mixed state until the partial
            # transpose is strictly PSD
            w = (-mineig + 1e-6) / (-mineig + 1.0 / d)
            m = (1 - w) * m + w * np.eye(d) / d
        st = state(m, lay)
        chk = partial_transpose(st.op, cut[1])
        if np.linalg.eigvalsh(chk.entries).min() < -1e-12:
            raise ParameterError("ppt sampler failed to produce a PPT state")
        return st

    if kind == "extension_of":
        rho = params["of"]
        if isinstance(rho, QuantumState):
            rho = rho.op
        dim_ext = int(params.get("dim", params.get("dim_C", 2)))
        label = params.get("label", "C")
        if dim_ext < 1:
            raise ParameterError("extension dimension must be positive")
        w, v = np.linalg.eigh(rho.entries)
        keep = w > 1e-14 * max(w.max(), 1e-300)
        w = np.clip(w[keep], 0, None)
        v = v[:, keep]
        r = len(w)
        dsys = rho.dim
        # purification amplitudes psi[i, r], then a random channel on the
        # purifying system (Stinespring isometry r -> dim_ext * r, with the
        # environment traced out)
        psi = v * np.sqrt(w)
        iso = _haar_isometry(rng, dim_ext * r, r)
        amp = np.tensordot(psi, iso, axes=([1], [1]))  # dsys x (dim_ext*r)
        amp = amp.reshape(dsys, dim_ext, r)
        big = np.einsum("ice,jde->icjd", amp, amp.conj())
        big = big.reshape(dsys * dim_ext, dsys * dim_ext)
        ext_lay = lay.concat(SystemLayout((label,), (dim_ext,)))
        big = (big + big.conj().T) / 2
        big /= np.trace(big).real
        return state(big, ext_lay)

    if kind == "one_way_locc_channel":
        cut = params.get("cut")
        if cut is None:
            cut = ((lay.labels[0],), (lay.labels[1],))
        cut = (_as_labels(cut[0]), _as_labels(cut[1]))
        k_branches = int(params.get("branches", 2))
        da = lay.dim_of(cut[0])
        db = lay.dim_of(cut[1])
        kraus_a = _random_kraus_set(rng, da, 2 * k_branches)
        branches = []
        for k in range(k_branches):
            e_k = tuple(kraus_a[2 * k:2 * k + 2])
            f_k = tuple(_random_kraus_set(rng, db, 2))
            branches.append((e_k, f_k))
        return OneWayChannel((cut[0], cut[1]), tuple(branches))

    raise ParameterError(f"unknown sample kind {kind!r}")


# ---------------------------------------------------------------------------
# File format

def operator_to_json(x: LabeledOperator) -> dict:
    return {
        "labels": list(x.layout.labels),
        "dims": list(x.layout.dims),
        "re": np.real(x.entries).tolist(),
        "im": np.imag(x.entries).tolist(),
    }


def operator_from_json(doc: dict, hermitian: bool = False) -> LabeledOperator:
    try:
        lay = SystemLayout(tuple(doc["labels"]), tuple(doc["dims"]))
        m = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed operator document: missing field {exc}")
    return LabeledOperator(lay, m, hermitian)


def save_operator(x: LabeledOperator, path) -> str:
    doc = operator_to_json(x)
    payload = json.dumps(doc, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(payload)
    return hashlib.sha256(payload.encode()).hexdigest()


def load_operator(path, hermitian: bool = False) -> LabeledOperator:
    with open(path) as fh:
        return operator_from_json(json.load(fh), hermitian)
