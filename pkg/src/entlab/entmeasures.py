"""Entanglement measures: relative entropy of entanglement and its measured
and PPT variants, multipartite versions, and extension-based upper values
for the squashed and conditional-mutual-information measures.

The separable-set minimizations use fully corrective conditional gradient:
each step adds the best product state for the current gradient, then
re-optimizes the mixture weights over the active atoms.  All returned
sigma-witnesses are feasible by construction, so every reported value is a
certified upper bound on the corresponding measure (heuristic for the
measured variants, whose inner solvers are themselves estimates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .linop import (
    LabeledOperator, ParameterError, QuantumState, SeparableDecomposition,
    SystemLayout, log_frechet_adjoint, partial_trace, permute, rng_for, sample,
    state, tensor, _as_labels,
)
from .entropy import cemi_term, cqmi, mutual_info, umegaki
from .measured import (
    ConeElement, MeasuredValue, best_product_vector, cone_bound, d_all, d_lo,
    d_locc1, dykstra_psd_pt, _kl_raw, _logm_psd, _op, _project_psd, _pt_spec,
)

DEFAULT_ORACLE_INITS = 10
DYKSTRA_CAP = 2000


@dataclass
class EntMeasureValue:
    value: float
    bound_direction: str  # "upper" | "heuristic"
    sigma_witness: object = None
    inner_witness: object = None
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _groups_of(op, partition):
    groups = [_as_labels(g) for g in partition]
    flat = [l for g in groups for l in g]
    if set(flat) != set(op.layout.labels) or len(flat) != len(op.layout.labels):
        raise ParameterError(f"partition {groups} does not cover {op.layout.labels}")
    return groups


def _atoms_to_decomposition(weights, atoms, groups, lay) -> SeparableDecomposition:
    keep = [(w, v) for w, v in zip(weights, atoms) if w > 1e-12]
    total = sum(w for w, _ in keep)
    return SeparableDecomposition(
        tuple(groups), np.array([w / total for w, _ in keep]),
        tuple(tuple(v) for _, v in keep), lay)


def _assemble(weights, atom_stack, dim) -> np.ndarray:
    out = np.tensordot(np.asarray(weights), atom_stack, axes=1)
    return (out + out.conj().T) / 2


def _reweight(atom_stack, weights, grad_fn, steps: int = 40) -> np.ndarray:
    """Exponentiated-gradient reoptimization of mixture weights (fully
    corrective step of the conditional-gradient loop)."""
    w = np.array(weights, dtype=float)
    w = np.clip(w, 1e-16, None)
    w /= w.sum()
    d = atom_stack.shape[1]
    eta = 1.0
    sigma = _assemble(w, atom_stack, d)
    cur, grad = grad_fn(sigma)
    for _ in range(steps):
        g = np.real(np.einsum("kij,ji->k", atom_stack, grad))
        g = g - g.min()
        trial = eta
        improved = False
        for _ in range(20):
            wt = w * np.exp(-trial * g)
            wt /= wt.sum()
            st = _assemble(wt, atom_stack, d)
            val, gr = grad_fn(st)
            if val < cur - 1e-14:
                w, cur, grad, sigma = wt, val, gr, st
                eta = min(trial * 1.5, 50.0)
                improved = True
                break
            trial *= 0.5
        if not improved:
            break
    return w


def _min_over_separable(rho_m, dims, groups, lay, objective_grad, seed,
                        inits=DEFAULT_ORACLE_INITS, max_iter=250,
                        gap_tol=1e-7, start=None, value_floor=1e-9):
    """Fully corrective conditional gradient over the separable state set.

    ``objective_grad(sigma) -> (value, gradient)`` must be convex in sigma
    and bounded below by zero (early exit at ``value_floor``).
    Returns (value, weights, atoms, sigma_matrix, fw_gap).
    """
    rng = rng_for(seed, "sep-min")
    d = int(np.prod(dims))

    def atom_matrix(vecs):
        m = np.array([1.0 + 0j])
        for v in vecs:
            m = np.kron(m, v)
        return np.outer(m, m.conj())

    # start: completely mixed state as a uniform product-basis mixture
    atoms = []
    if start is not None:
        atoms = [tuple(vecs) for _, vecs in start]
        weights = np.array([w for w, _ in start], dtype=float)
        weights /= weights.sum()
    else:
        basis_vecs = [np.eye(dg) for dg in dims]
        idx = np.stack(np.meshgrid(*[np.arange(dg) for dg in dims],
                                   indexing="ij"), -1).reshape(-1, len(dims))
        for combo in idx:
            atoms.append(tuple(basis_vecs[g][:, combo[g]].astype(complex)
                               for g in range(len(dims))))
        weights = np.full(len(atoms), 1.0 / len(atoms))
    atom_stack = np.stack([atom_matrix(v) for v in atoms])

    sigma = _assemble(weights, atom_stack, d)
    val, grad = objective_grad(sigma)
    gap = math.inf
    warm = None
    for it in range(max_iter):
        if val <= value_floor:
            gap = 0.0
            break
        # linear oracle: best product state for the (negated) gradient;
        # after the first pass, warm-start from the previous vertex with a
        # couple of random escapes
        n_inits = inits if it < 3 else max(2, inits // 4)
        _, vecs = best_product_vector(-grad, dims, rng, inits=n_inits,
                                      warm=warm)
        warm = [vecs]
        vfull = vecs[0]
        for v in vecs[1:]:
            vfull = np.kron(vfull, v)
        vertex = np.outer(vfull, vfull.conj())
        gap = float(np.real(np.trace(grad @ (sigma - vertex))))
        if gap <= gap_tol:
            break

        def obj(gamma):
            return objective_grad((1 - gamma) * sigma + gamma * vertex)[0]

        step = minimize_scalar(obj, bounds=(0.0, 1.0), method="bounded",
                               options={"xatol": 1e-12})
        gamma = float(step.x)
        if gamma < 1e-14 and it > 0:
            weights = _reweight(atom_stack, weights, objective_grad)
            sigma = _assemble(weights, atom_stack, d)
            val, grad = objective_grad(sigma)
            break
        weights = np.append(weights * (1 - gamma), gamma)
        atoms.append(tuple(vecs))
        atom_stack = np.concatenate([atom_stack, vertex[None]], axis=0)
        if (it + 1) % 4 == 0 or gap < 10 * gap_tol:
            weights = _reweight(atom_stack, weights, objective_grad)
        # prune dead atoms to respect the Caratheodory-style cap
        if len(atoms) > 4 * d * d:
            keep = weights > 1e-12
            weights = weights[keep]
            atoms = [a for a, k in zip(atoms, keep) if k]
            atom_stack = atom_stack[keep]
        weights /= weights.sum()
        sigma = _assemble(weights, atom_stack, d)
        val, grad = objective_grad(sigma)
    keep = weights > 1e-12
    weights = weights[keep] / weights[keep].sum()
    atoms = [a for a, k in zip(atoms, keep) if k]
    atom_stack = atom_stack[keep]
    sigma = _assemble(weights, atom_stack, d)
    val, _ = objective_grad(sigma)
    return val, weights, atoms, sigma, gap


def _umegaki_grad(rho_m):
    """Objective/gradient closure for sigma -> D(rho || sigma)."""
    lr = _logm_psd(rho_m)
    base = float(np.real(np.trace(rho_m @ lr)))

    def fn(sigma):
        ls = _logm_psd(sigma)
        val = base - float(np.real(np.trace(rho_m @ ls)))
        grad = -log_frechet_adjoint(sigma, rho_m)
        return val, (grad + grad.conj().T) / 2

    return fn


def ree(rho, partition=None, restarts: int = DEFAULT_ORACLE_INITS, seed: int = 0,
        max_iter: int = 250, gap_tol: float = 1e-7) -> EntMeasureValue:
    """Relative entropy of entanglement across ``partition`` (upper bound
    with an explicit separable witness)."""
    op = _op(rho)
    if partition is None:
        partition = tuple((l,) for l in op.layout.labels)
    groups = _groups_of(op, partition)
    order = sum(groups, ())
    rho_m = permute(op, order).entries
    dims = [op.layout.dim_of(g) for g in groups]
    lay = SystemLayout(order, sum((op.layout.dims_of(g) for g in groups), ()))
    val, weights, atoms, sigma, gap = _min_over_separable(
        rho_m, dims, groups, lay, _umegaki_grad(rho_m), seed,
        inits=restarts, max_iter=max_iter, gap_tol=gap_tol)
    witness = _atoms_to_decomposition(weights, atoms, groups, lay)
    # anti-drift: report the divergence to the assembled witness
    val = float(umegaki(state(rho_m, lay), state(witness.assemble().entries, lay)))
    return EntMeasureValue(max(val, 0.0), "upper", witness,
                           diagnostics={"fw_gap": gap})


def ree3(rho, A, B, C, class_tag: str = "exact", restarts: int = DEFAULT_ORACLE_INITS,
         seed: int = 0, **kw) -> EntMeasureValue:
    """Tripartite relative entropy of entanglement and its variants."""
    if class_tag == "exact":
        return ree(rho, (A, B, C), restarts=restarts, seed=seed, **kw)
    if class_tag == "ALL":
        return ree_measured(rho, (A, B, C), "ALL", restarts=restarts, seed=seed)
    if class_tag == "SEPP-cone":
        base = ree(rho, (A, B, C), restarts=restarts, seed=seed)
        inner = cone_bound(rho, base.sigma_witness.as_state(), "SEPP",
                           cut=(A, B, C), seed=seed)
        return EntMeasureValue(inner.value, "heuristic", base.sigma_witness,
                               inner.witness, {"outer": base.value})
    if class_tag == "PPT-cone":
        base = ppt_ree(rho, (A, B, C), restarts=restarts, seed=seed)
        sig_st = state(base.sigma_witness, base.diagnostics["layout"])
        inner = cone_bound(rho, sig_st, "PPT", cut=(A, B, C), seed=seed)
        return EntMeasureValue(inner.value, "heuristic", base.sigma_witness,
                               inner.witness, {"outer": base.value})
    raise ParameterError(f"unknown class {class_tag!r}")


def _measured_solver(class_tag):
    if class_tag == "ALL":
        return lambda r, s, cut, restarts, seed: d_all(r, s)
    if class_tag == "LOCC1":
        return lambda r, s, cut, restarts, seed: d_locc1(
            r, s, cut=cut, restarts=restarts, seed=seed)
    if class_tag == "LO":
        return lambda r, s, cut, restarts, seed: d_lo(
            r, s, cut=cut, restarts=restarts, seed=seed)
    raise ParameterError(f"unknown measurement class {class_tag!r}")


def ree_measured(rho, partition, class_tag: str, restarts: int = 6,
                 seed: int = 0, rounds: int = 3,
                 extra_sigmas=None) -> EntMeasureValue:
    """Measured relative entropy of entanglement (alternating min-max).

    Outer conditional gradient over the separable state for a fixed
    measurement (a convex problem), inner measurement re-optimization via
    the measured module.  Both witnesses are returned; the value direction
    is heuristic.
    """
    op = _op(rho)
    groups = _groups_of(op, partition)
    order = sum(groups, ())
    rho_m = permute(op, order).entries
    dims = [op.layout.dim_of(g) for g in groups]
    lay = SystemLayout(order, sum((op.layout.dims_of(g) for g in groups), ()))
    cut = tuple(groups) if len(groups) == 2 else None
    if class_tag in ("LOCC1", "LO") and cut is None:
        raise ParameterError("LOCC1/LO need a bipartite partition")
    solver = _measured_solver(class_tag)
    rho_st = state(rho_m, lay)

    base = ree(rho, partition, restarts=restarts, seed=seed)
    sigma_dec = base.sigma_witness
    candidates = [sigma_dec]
    if extra_sigmas:
        candidates.extend(extra_sigmas)

    best = None
    for ci, cand in enumerate(candidates):
        sig_mat = permute(cand.assemble(), order).entries if \
            isinstance(cand, SeparableDecomposition) else np.asarray(cand)
        weights_atoms = None
        if isinstance(cand, SeparableDecomposition):
            weights_atoms = list(zip(cand.weights, cand.vectors))
        inner = solver(rho_st, state(sig_mat, lay), cut, restarts, seed)
        cur = (inner.value, cand, inner)
        for _ in range(rounds):
            effect_stack = np.asarray(inner.witness.elements)
            p = np.clip(inner.witness.born(rho_st), 0.0, None)

            def kl_grad(sigma, _E=effect_stack, _p=p):
                q = np.clip(np.real(np.einsum("zij,ji->z", _E, sigma)),
                            1e-300, None)
                val = _kl_raw(_p, q)
                grad = -np.tensordot(_p / q, _E, axes=1)
                return val, (grad + grad.conj().T) / 2

            val, weights, atoms, sig_mat, gap = _min_over_separable(
                rho_m, dims, groups, lay, kl_grad, seed + 17 * ci,
                inits=restarts, max_iter=120, gap_tol=1e-7,
                start=weights_atoms)
            weights_atoms = list(zip(weights, atoms))
            inner = solver(rho_st, state(sig_mat, lay), cut, restarts, seed)
            dec = _atoms_to_decomposition(weights, atoms, groups, lay)
            if inner.value < cur[0] - 1e-12:
                cur = (inner.value, dec, inner)
            else:
                cur = min(cur, (inner.value, dec, inner), key=lambda t: t[0])
                break
        if best is None or cur[0] < best[0]:
            best = cur
    val, dec, inner = best
    return EntMeasureValue(max(val, 0.0), "heuristic", dec, inner.witness,
                           {"class": class_tag})


def _dykstra_ppt_state(m, dims, groups_positions, iters=DYKSTRA_CAP,
                       tol=1e-10):
    """Project onto PPT states: PSD, PSD after each group partial transpose,
    unit trace."""
    d = m.shape[0]
    sets = [None] + list(groups_positions) + ["trace"]
    x = m.copy()
    corr = [np.zeros_like(m) for _ in sets]
    for _ in range(iters):
        start = x.copy()
        for i, g in enumerate(sets):
            y = x + corr[i]
            if g is None:
                proj = _project_psd(y)
            elif g == "trace":
                proj = y + (1.0 - np.trace(y).real) / d * np.eye(d)
            else:
                proj = _pt_spec(_project_psd(_pt_spec(y, dims, g)), dims, g)
            corr[i] = y - proj
            x = proj
        if np.abs(x - start).max() < tol:
            break
    return (x + x.conj().T) / 2


def ppt_ree(rho, partition=None, restarts: int = DEFAULT_ORACLE_INITS,
            seed: int = 0, max_iter: int = 200) -> EntMeasureValue:
    """Minimum relative entropy to the PPT-state set (projected gradient
    with Dykstra alternation).  The witness is the PPT sigma matrix."""
    op = _op(rho)
    if partition is None:
        labs = op.layout.labels
        partition = (labs[:1], labs[1:])
    groups = _groups_of(op, partition)
    order = sum(groups, ())
    rho_m = permute(op, order).entries
    dims_flat = [op.layout.dim_of(g) for g in groups]
    group_positions = [[i] for i in range(len(groups))]
    lay = SystemLayout(order, sum((op.layout.dims_of(g) for g in groups), ()))
    d = op.dim
    fn = _umegaki_grad(rho_m)
    sigma = np.eye(d, dtype=complex) / d
    val, grad = fn(sigma)
    eta = 0.5
    for _ in range(max_iter):
        gn = np.linalg.norm(grad)
        if gn < 1e-10:
            break
        improved = False
        e = eta
        for _ in range(25):
            cand = _dykstra_ppt_state(sigma - e * grad / gn, dims_flat,
                                      group_positions)
            cand = 0.999999 * cand + 1e-6 * np.eye(d) / d
            cv, cg = fn(cand)
            if cv < val - 1e-13:
                sigma, val, grad = cand, cv, cg
                eta = min(e * 1.5, 5.0)
                improved = True
                break
            e *= 0.5
        if not improved:
            break
    # final feasibility polish; keep a tiny mixed-state floor so the witness
    # divergence stays finite for full-rank inputs
    sigma = _dykstra_ppt_state(sigma, dims_flat, group_positions, tol=1e-12)
    sigma = (1 - 1e-9) * sigma + 1e-9 * np.eye(d) / d
    sigma = sigma / np.trace(sigma).real
    val = float(umegaki(state(rho_m, lay), state(sigma, lay)))
    mineigs = {str(groups[i]): float(np.linalg.eigvalsh(
        _pt_spec(sigma, dims_flat, [i])).min()) for i in range(len(groups))}
    return EntMeasureValue(max(val, 0.0), "upper", sigma,
                           diagnostics={"pt_min_eigenvalues": mineigs,
                                        "layout": lay})


def ppt_ree_measured(rho, partition=None, restarts: int = 6, seed: int = 0,
                     rounds: int = 2) -> EntMeasureValue:
    """PPT-measured divergence minimized over PPT states (both sides via the
    PPT cone; heuristic alternation)."""
    op = _op(rho)
    if partition is None:
        labs = op.layout.labels
        partition = (labs[:1], labs[1:])
    groups = _groups_of(op, partition)
    order = sum(groups, ())
    rho_m = permute(op, order).entries
    dims_flat = [op.layout.dim_of(g) for g in groups]
    group_positions = [[i] for i in range(len(groups))]
    lay = SystemLayout(order, sum((op.layout.dims_of(g) for g in groups), ()))
    d = op.dim
    base = ppt_ree(rho, partition, restarts=restarts, seed=seed)
    sigma = np.asarray(base.sigma_witness)
    rho_st = state(rho_m, lay)
    inner = cone_bound(rho_st, state(sigma, lay), "PPT", cut=tuple(groups),
                       seed=seed)
    best = (inner.value, sigma, inner)
    for _ in range(rounds):
        w = inner.witness.operator
        # sigma-step: increase tr[sigma w] over PPT states (reduces the bound)
        val = best[0]
        eta = 0.5
        for _ in range(20):
            cand = _dykstra_ppt_state(sigma + eta * w / np.linalg.norm(w),
                                      dims_flat, group_positions)
            cand = 0.999999 * cand + 1e-6 * np.eye(d) / d
            iv = cone_bound(rho_st, state(cand, lay), "PPT",
                            cut=tuple(groups), seed=seed)
            if iv.value < val - 1e-10:
                sigma, val, inner = cand, iv.value, iv
                break
            eta *= 0.5
        if val < best[0] - 1e-10:
            best = (val, sigma, inner)
        else:
            break
    val, sigma, inner = best
    return EntMeasureValue(max(val, 0.0), "heuristic", sigma, inner.witness,
                           diagnostics={"layout": lay})


# ---------------------------------------------------------------------------
# Extension-based upper values

def _extension_candidates(rho, ancilla_dims, n_samples, seed, sep_decomp=None,
                          two_sided=False):
    """Extension family: trivial, purification-channel samples, and the
    classical-flag extension for explicitly separable inputs."""
    op = _op(rho)
    out = []
    lay = op.layout
    # trivial extension (dimension-1 ancillas)
    if two_sided:
        triv = tensor(tensor(op, LabeledOperator(SystemLayout(("Ab",), (1,)),
                                                 np.eye(1), True)),
                      LabeledOperator(SystemLayout(("Bb",), (1,)), np.eye(1), True))
        out.append(("trivial", state(triv.entries, triv.layout)))
    else:
        triv = tensor(op, LabeledOperator(SystemLayout(("C",), (1,)), np.eye(1), True))
        out.append(("trivial", state(triv.entries, triv.layout)))
    for i in range(n_samples):
        for dim_c in ancilla_dims:
            if two_sided:
                ext_a = sample("extension_of", lay, seed + 101 * i, of=op,
                               dim=dim_c, label="Ab")
                # extend the B side of the already-extended state
                ext = sample("extension_of", ext_a.layout, seed + 101 * i + 51,
                             of=ext_a, dim=dim_c, label="Bb")
                out.append((f"purify-{i}-{dim_c}", ext))
            else:
                ext = sample("extension_of", lay, seed + 101 * i, of=op,
                             dim=dim_c, label="C")
                out.append((f"purify-{i}-{dim_c}", ext))
    if sep_decomp is not None:
        out.append(("flag", _flag_extension(sep_decomp, two_sided)))
    return out


def _flag_extension(dec: SeparableDecomposition, two_sided: bool) -> QuantumState:
    k = dec.term_count
    lay = dec.layout
    labels = lay.labels
    if two_sided:
        new_lay = SystemLayout(labels + ("Ab", "Bb"), lay.dims + (k, k))
    else:
        new_lay = SystemLayout(labels + ("C",), lay.dims + (k,))
    d = new_lay.dim
    big = np.zeros((d, d), dtype=complex)
    for i, (w, vecs) in enumerate(zip(dec.weights, dec.vectors)):
        flag = np.zeros(k)
        flag[i] = 1.0
        m = np.array([1.0 + 0j])
        for v in vecs:
            m = np.kron(m, v)
        term = np.outer(m, m.conj())
        if two_sided:
            term = np.kron(np.kron(term, np.outer(flag, flag)),
                           np.outer(flag, flag))
        else:
            term = np.kron(term, np.outer(flag, flag))
        big += w * term
    # the flag product above follows the grouped ordering of the partition
    grouped = SystemLayout(
        sum((g for g in dec.partition), ()) + (("Ab", "Bb") if two_sided else ("C",)),
        sum((lay.dims_of(g) for g in dec.partition), ()) + ((k, k) if two_sided else (k,)))
    op = permute(LabeledOperator(grouped, big, True), new_lay.labels)
    return state(op.entries, new_lay)


def squashed_upper(rho, A="A", B="B", ancilla_dims=(2, 4), n_samples: int = 4,
                   seed: int = 0, sep_decomp=None) -> EntMeasureValue:
    """Upper bound on squashed entanglement: min of half the conditional
    mutual information over a family of sampled extensions."""
    best = (math.inf, None)
    for name, ext in _extension_candidates(rho, ancilla_dims, n_samples, seed,
                                           sep_decomp, two_sided=False):
        cl = [l for l in ext.layout.labels if l not in _as_labels(A) + _as_labels(B)]
        v = 0.5 * cqmi(ext, A, B, cl)
        if v < best[0]:
            best = (v, name)
    return EntMeasureValue(max(best[0], 0.0), "heuristic",
                           diagnostics={"best_extension": best[1]})


def cemi_upper(rho, A="A", B="B", ancilla_dims=(2,), n_samples: int = 4,
               seed: int = 0, sep_decomp=None) -> EntMeasureValue:
    """Upper bound on the conditional entanglement of mutual information:
    min of half (I(A Ab : B Bb) - I(Ab : Bb)) over sampled extensions."""
    best = (math.inf, None)
    for name, ext in _extension_candidates(rho, ancilla_dims, n_samples, seed,
                                           sep_decomp, two_sided=True):
        v = 0.5 * cemi_term(ext, A, "Ab", B, "Bb")
        if v < best[0]:
            best = (v, name)
    # the trivial extension gives half the mutual information
    return EntMeasureValue(max(best[0], 0.0), "heuristic",
                           diagnostics={"best_extension": best[1]})
