"""Registry of named, reproducible inequality checks.

Every check assembles quantities from the other modules, tracks the bound
direction of each sub-quantity, and emits a GapReport with gap = lhs - rhs.
Strict checks combine only exact values or conservatively directed bounds,
so a negative gap beyond tolerance is a genuine failure; heuristic checks
use best-found optimizer values and carry a wider tolerance.  Reported
witnesses always re-evaluate to their quoted values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .linop import (
    LabeledOperator, ParameterError, SystemLayout, layout, partial_trace,
    partial_transpose, permute, rng_for, sample, state, spectral, matfun,
)
from .entropy import (
    cemi_term, cemi_term3, classical_identities, cqmi, exp_state_form,
    markov_state, tripartite_cqmi, umegaki,
)
from .measured import (
    cone_bound, d_all, d_lo, d_locc1, d_pinch, fidelity, pushback_value,
    restricted_fid_norm, _logm_psd,
)
from .entmeasures import ppt_ree, ree, ree_measured
from .recovery import (
    averaged_recover, averaged_recover_decomposition, beta0_rule,
    gamma_construction, markov_recovery_deviation, rotated_petz,
    transpose_twirl_identity,
)
from .parallel import max_threads


@dataclass
class CheckConfig:
    """Tolerances, solver budgets, and sampling controls for check runs."""

    seed: int = 0
    trials: int = 1
    restarts: int = 6
    quad_n: int = 201
    tol_strict: float = 1e-7
    tol_identity: float = 1e-9
    tol_heur: float = 1e-3
    iter_cap: int = 500
    parallelism: int = 1
    scale: float = 1.0
    dims: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "CheckConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**doc)
        for name in ("trials", "restarts", "quad_n", "iter_cap", "parallelism"):
            if getattr(cfg, name) < 1:
                raise ParameterError(f"config field {name} must be positive")
        for name in ("tol_strict", "tol_identity", "tol_heur", "scale"):
            if getattr(cfg, name) <= 0:
                raise ParameterError(f"config field {name} must be positive")
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GapReport:
    check: str
    trial: int
    lhs: float
    rhs: float
    gap: float
    strict: bool
    tolerance: float
    violated: bool
    incomplete: bool = False
    directions: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def clean(x):
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, (np.floating, float)):
                return float(x)
            if isinstance(x, (np.integer, int)):
                return int(x)
            if isinstance(x, np.ndarray):
                return clean(x.tolist())
            if isinstance(x, complex):
                return [x.real, x.imag]
            return x

        return {
            "check": self.check,
            "trial": self.trial,
            "lhs": clean(self.lhs),
            "rhs": clean(self.rhs),
            "gap": clean(self.gap),
            "strict": self.strict,
            "tolerance": clean(self.tolerance),
            "violated": self.violated,
            "incomplete": self.incomplete,
            "directions": clean(self.directions),
            "witnesses": clean(self.witnesses),
            "budget": clean(self.budget),
        }


@dataclass(frozen=True)
class CheckSpec:
    """One registry entry: identifier, human-readable statement of the
    inequality or identity, required layout, strictness, and runner."""

    id: str
    statement: str
    layout_hint: str
    strict: bool
    identity: bool
    runner: object
    default_tolerance: str  # config field name providing the tolerance


_REGISTRY: dict[str, CheckSpec] = {}


def _register(check_id, statement, layout_hint, strict, identity=False,
              tolerance="tol_strict"):
    def wrap(fn):
        _REGISTRY[check_id] = CheckSpec(check_id, statement, layout_hint,
                                        strict, identity, fn, tolerance)
        return fn
    return wrap


def list_checks() -> list[CheckSpec]:
    """Complete registry in stable order."""
    return [_REGISTRY[k] for k in sorted(_REGISTRY)]


def _report(spec, config, trial, lhs, rhs, directions=None, witnesses=None,
            budget=None, incomplete=False, tolerance=None):
    gap = lhs - rhs
    tol = tolerance if tolerance is not None else getattr(config, spec.default_tolerance)
    if spec.identity:
        violated = abs(gap) > tol
    else:
        violated = gap < -tol
    return GapReport(spec.id, trial, float(lhs), float(rhs), float(gap),
                     spec.strict, float(tol), bool(violated), bool(incomplete),
                     directions or {}, witnesses or {}, budget or {})


def _qubits(n, names=None):
    names = names or [chr(65 + i) for i in range(n)]
    return SystemLayout(tuple(names), (2,) * n)


def _rand_state(lay, seed, tag):
    return sample("ginibre_state", lay, seed=seed + _stable_offset(tag))


def _stable_offset(tag: str) -> int:
    return int.from_bytes(tag.encode(), "little") % 100003


def _sep_witness_state(dec):
    return state(dec.assemble().entries, dec.layout)


# ---------------------------------------------------------------------------
# identity and strict checks

@_register("ssa", "conditional mutual information is nonnegative on every "
           "tripartite state", "(2,2,2)", strict=True, tolerance="tol_identity")
def _check_ssa(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "ssa")
    lhs = cqmi(rho, "A", "B", "C")
    return dict(lhs=lhs, rhs=0.0,
                directions={"lhs": "exact", "rhs": "exact"})


@_register("exp_state", "conditional mutual information equals the relative "
           "entropy to the exponentiated sum of marginal logarithms",
           "(2,2,2)", strict=True, identity=True, tolerance="tol_strict")
def _check_exp_state(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "exp_state")
    labs = rho.layout.labels
    _, div = exp_state_form(rho, labs[0], labs[1], labs[2])
    lhs = cqmi(rho, labs[0], labs[1], labs[2])
    return dict(lhs=lhs, rhs=div, tolerance=1e-8,
                directions={"lhs": "exact", "rhs": "exact"})


@_register("classical", "classical conditional mutual information equals the "
           "divergence to the conditional-recovery and Markov-chain "
           "distributions", "pmf (2,2,2)", strict=True, identity=True,
           tolerance="tol_identity")
def _check_classical(config, trial_seed, st=None):
    rng = rng_for(trial_seed, "classical")
    P = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
    rep = classical_identities(P)
    return dict(lhs=rep.max_deviation, rhs=0.0, tolerance=1e-12,
                directions={"lhs": "exact", "rhs": "exact"})


@_register("markov_zero", "states with the direct-sum Markov structure have "
           "zero conditional mutual information and are exactly recovered by "
           "the averaged rotated recovery map", "(2, 4, 2)", strict=True,
           identity=True, tolerance="tol_strict")
def _check_markov_zero(config, trial_seed, st=None):
    rng = rng_for(trial_seed, "markov_zero")

    def blk(d):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = g @ g.conj().T
        return m / np.trace(m).real

    blocks = [((blk(4), (2, 2)), (blk(4), (2, 2)))]
    if trial_seed % 2:
        blocks = [((blk(4), (2, 2)), (blk(4), (2, 2))),
                  ((blk(2), (2, 1)), (blk(2), (1, 2)))]
        weights = [0.4, 0.6]
    else:
        weights = [1.0]
    mstate, _ = markov_state(weights, blocks)
    cq = cqmi(mstate, "A", "B", "C")
    rule = beta0_rule(config.quad_n)
    dev = markov_recovery_deviation(mstate, rule)
    return dict(lhs=max(cq, dev), rhs=0.0, tolerance=1e-8,
                directions={"cqmi": cq, "recovery_trace_distance": dev})


@_register("pb", "normalized exponential bound: tr[G2 exp(G1)] is at most "
           "log tr[exp(G1 + G2)] when tr[exp(G1)] = 1", "Hermitian pair",
           strict=True, tolerance="tol_identity")
def _check_pb(config, trial_seed, st=None):
    d = config.dims.get("d", 4)
    g1 = sample("hermitian", layout(A=d), trial_seed, scale=config.scale)
    g2 = sample("hermitian", layout(A=d), trial_seed + 1, scale=config.scale)
    w, v = spectral(g1)
    shift = math.log(np.exp(w).sum())
    g1n = g1.entries - shift * np.eye(d)
    e1 = matfun(LabeledOperator(g1.layout, g1n, True), "exp").entries
    lhs = math.log(float(np.real(np.trace(
        matfun(LabeledOperator(g1.layout, g1n + g2.entries, True), "exp").entries))))
    rhs = float(np.real(np.trace(g2.entries @ e1)))
    return dict(lhs=lhs, rhs=rhs, tolerance=1e-9,
                directions={"lhs": "exact", "rhs": "exact",
                            "normalization": float(np.real(np.trace(e1)))})


def _schatten(m, p):
    s = np.linalg.svd(m, compute_uv=False)
    return float((s ** p).sum() ** (1.0 / p))


def _gt_rhs(hs, p, rule):
    eigs = [np.linalg.eigh(h) for h in hs]
    total = 0.0
    d = hs[0].shape[0]
    for ti, wi in zip(rule.nodes, rule.weights):
        prod = np.eye(d, dtype=complex)
        for w, v in eigs:
            prod = prod @ ((v * np.exp((1 + 1j * ti) * w)) @ v.conj().T)
        total += wi * math.log(_schatten(prod, p))
    return total


def _check_gt_multi(n, p):
    def run(config, trial_seed, st=None):
        d = config.dims.get("d", 3)
        hs = [sample("hermitian", layout(A=d), trial_seed + 7 * k,
                     scale=config.scale).entries for k in range(n)]
        rule = beta0_rule(config.quad_n)
        w, v = np.linalg.eigh(sum(hs))
        lhs = math.log(_schatten((v * np.exp(w)) @ v.conj().T, p))
        rhs = _gt_rhs(hs, p, rule)
        # the product-of-exponentials side dominates
        return dict(lhs=rhs, rhs=lhs,
                    directions={"average_side": "exact quadrature",
                                "exponential_side": "exact"})
    return run


for _n in (2, 3, 4, 5, 6):
    for _p in (1, 2):
        _register(f"gt_multi({_n},{_p})",
                  f"trace inequality: log of the Schatten-{_p} norm of "
                  f"exp(sum of {_n} Hermitians) is bounded by the averaged "
                  "log-norm of the rotated exponential product",
                  "Hermitian tuple", strict=True,
                  tolerance="tol_strict")(_check_gt_multi(_n, _p))


def _check_achiev(n):
    def run(config, trial_seed, st=None):
        rng = rng_for(trial_seed, f"achiev{n}")
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        s0 = g @ g.conj().T
        s0 /= np.trace(s0).real
        sig = np.array([[1.0]])
        for _ in range(n):
            sig = np.kron(sig, s0)
        lay = _qubits(n, [f"A{i}" for i in range(n)])
        sig_st = state(sig, lay)
        rho = sample("ginibre_state", lay, trial_seed + 3)
        dv = float(umegaki(rho, sig_st))
        pv = d_pinch(rho, sig_st)
        nspec = pv.diagnostics["distinct_spectrum"]
        lower = dv - math.log(nspec)
        gap = min(pv.value - lower, dv - pv.value)
        return dict(lhs=gap, rhs=0.0, tolerance=1e-8,
                    directions={"divergence": dv, "pinch_value": pv.value,
                                "distinct_spectrum": nspec,
                                "measured_lower": "feasible measurement",
                                "upper": "data processing"})
    return run


for _n in (1, 2, 3):
    _register(f"achiev_sandwich({_n})",
              "the reference-eigenbasis pinching measurement sandwiches the "
              "measured relative entropy between D - log|spec| and D on "
              f"{_n} permutation-invariant copies", "qubit copies",
              strict=True, tolerance="tol_strict")(_check_achiev(_n))


@_register("cqmi_recovery_fid", "conditional mutual information dominates "
           "the averaged negative log-fidelity of rotated recovery from the "
           "unconditioned marginal", "(2,2,2)", strict=True,
           tolerance="tol_strict")
def _check_cqmi_recovery_fid(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "cqmi_rec")
    rule = beta0_rule(config.quad_n)
    rho_ac = partial_trace(rho.op, "B")
    rho_bc = partial_trace(rho.op, "A")
    acc = 0.0
    for ti, wi in zip(rule.nodes, rule.weights):
        rec = rotated_petz(rho_bc, "B", ti).apply(rho_ac)
        rec = permute(rec, rho.layout.labels)
        acc += wi * math.log(max(fidelity(rho, rec), 1e-300))
    lhs = cqmi(rho, "A", "B", "C")
    return dict(lhs=lhs, rhs=-acc,
                directions={"lhs": "exact", "rhs": "exact quadrature"})


@_register("cemi_recover_fid", "the symmetric conditional mutual information "
           "dominates the averaged negative log-fidelity of two-sided rotated "
           "recovery from the ancilla marginal", "(2,2,2,2)", strict=True,
           tolerance="tol_strict")
def _check_cemi_recover_fid(config, trial_seed, st=None):
    lay = _qubits(4, ["A", "Ab", "B", "Bb"])
    rho = st or _rand_state(lay, trial_seed, "cemi_fid")
    rule = beta0_rule(config.quad_n)
    rho_abar = partial_trace(rho.op, ("B", "Bb"))
    rho_bbar = partial_trace(rho.op, ("A", "Ab"))
    inner = partial_trace(rho.op, ("A", "B"))
    acc = 0.0
    for ti, wi in zip(rule.nodes, rule.weights):
        rec = rotated_petz(rho_abar, "A", ti).apply(inner)
        rec = rotated_petz(rho_bbar, "B", ti).apply(rec)
        rec = permute(rec, rho.layout.labels)
        acc += wi * math.log(max(fidelity(rho, rec), 1e-300))
    lhs = cemi_term(rho, "A", "Ab", "B", "Bb")
    return dict(lhs=lhs, rhs=-acc, tolerance=1e-6,
                directions={"lhs": "exact", "rhs": "exact quadrature"})


@_register("squashed_multi_recover", "the tripartite conditional mutual "
           "information dominates the averaged negative log-fidelity of the "
           "composed rotated recovery of the remaining parties",
           "(2,2,2,2)", strict=True, tolerance="tol_strict")
def _check_squashed_multi_recover(config, trial_seed, st=None):
    lay = SystemLayout(("A1", "A2", "A3", "C"), (2, 2, 2, 2))
    rho = st or _rand_state(lay, trial_seed, "sq_multi")
    rule = beta0_rule(config.quad_n)
    rho_a1c = partial_trace(rho.op, ("A2", "A3"))
    rho_a2c = partial_trace(rho.op, ("A1", "A3"))
    rho_a3c = partial_trace(rho.op, ("A1", "A2"))
    acc = 0.0
    for ti, wi in zip(rule.nodes, rule.weights):
        rec = rotated_petz(rho_a2c, "A2", ti).apply(rho_a1c)
        rec = rotated_petz(rho_a3c, "A3", ti).apply(rec)
        rec = permute(rec, rho.layout.labels)
        acc += wi * math.log(max(fidelity(rho, rec), 1e-300))
    lhs = tripartite_cqmi(rho, "A1", "A2", "A3", "C")
    return dict(lhs=lhs, rhs=-acc, tolerance=1e-6,
                directions={"lhs": "exact", "rhs": "exact quadrature"})


@_register("cemi_multi_recover", "the three-party symmetric conditional "
           "mutual information dominates the averaged negative log-fidelity "
           "of three-sided rotated recovery", "(2,)*6", strict=False,
           tolerance="tol_strict")
def _check_cemi_multi_recover(config, trial_seed, st=None):
    lay = SystemLayout(("A", "Ab", "B", "Bb", "C", "Cb"), (2,) * 6)
    rho = st or _rand_state(lay, trial_seed, "cemi_multi_rec")
    rule = beta0_rule(config.quad_n)
    r_a = partial_trace(rho.op, ("B", "Bb", "C", "Cb"))
    r_b = partial_trace(rho.op, ("A", "Ab", "C", "Cb"))
    r_c = partial_trace(rho.op, ("A", "Ab", "B", "Bb"))
    inner = partial_trace(rho.op, ("A", "B", "C"))
    acc = 0.0
    for ti, wi in zip(rule.nodes, rule.weights):
        rec = rotated_petz(r_a, "A", ti).apply(inner)
        rec = rotated_petz(r_b, "B", ti).apply(rec)
        rec = rotated_petz(r_c, "C", ti).apply(rec)
        rec = permute(rec, rho.layout.labels)
        acc += wi * math.log(max(fidelity(rho, rec), 1e-300))
    lhs = cemi_term3(rho, "A", "Ab", "B", "Bb", "C", "Cb")
    return dict(lhs=lhs, rhs=-acc, tolerance=1e-6,
                directions={"lhs": "exact",
                            "rhs": "exact quadrature (fidelity form)"})


# ---------------------------------------------------------------------------
# heuristic monogamy checks

@_register("sq_main", "conditional mutual information is bounded below by "
           "the one-way measured entanglement of the unconditioned pair "
           "minus the measured-vs-exact gap of the conditioned pair",
           "(2,2,2)", strict=False, tolerance="tol_heur")
def _check_sq_main(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "sq_main")
    r = config.restarts
    # heuristic layer
    rho_ac_state = state(partial_trace(rho.op, "B").entries, layout(A=2, C=2))
    e_ac = ree(rho_ac_state, (("A",), ("C",)), restarts=r, seed=trial_seed)
    e_all_ac = ree_measured(rho_ac_state, (("A",), ("C",)), "ALL",
                            restarts=max(2, r // 2), seed=trial_seed)
    rho_ab_state = state(partial_trace(rho.op, "C").entries, layout(A=2, B=2))
    e_locc1_ba = ree_measured(rho_ab_state, (("B",), ("A",)), "LOCC1",
                              restarts=max(2, r // 2), seed=trial_seed)
    cq = cqmi(rho, "A", "B", "C")
    lhs = cq + e_ac.value - e_all_ac.value
    rhs = e_locc1_ba.value

    # strict witness layer: five-matrix chain with explicit X, Y, gamma
    rule = beta0_rule(config.quad_n)
    sigma_dec = e_ac.sigma_witness
    gout = gamma_construction(rho, sigma_dec, None, rule,
                              labels=("A", "B", "C"))
    chain = _sq_witness_chain(rho, sigma_dec, gout, rule, config, trial_seed)
    return dict(lhs=lhs, rhs=rhs,
                directions={"cqmi": "exact",
                            "ree_ac": "upper (feasible witness)",
                            "ree_all_ac": "heuristic",
                            "ree_locc1_ba": "heuristic",
                            "witness_chain_slack": chain["slack"],
                            "witness_chain_strict": chain["slack"] >= -1e-6},
                witnesses={"chain": chain},
                incomplete=False)


def _sq_witness_chain(rho, sigma_dec, gout, rule, config, seed):
    """Five-matrix trace-inequality chain at the witness level:
    I(A:B|C) + D(rho_AC || sigma) >= tr[rho_AB log X] + tr[rho_AC log Y]
      - log(tr[X gamma_AB] tr[Y gamma_hat_AC])."""
    rho_ab = partial_trace(rho.op, "C")
    rho_ac = partial_trace(rho.op, "B")
    gamma_ab = state(gout.gamma_ab.entries / gout.gamma_ab.trace().real,
                     gout.gamma_ab.layout)
    # one-way witness measuring B first, conditioned on A
    inner = d_locc1(state(rho_ab.entries, rho_ab.layout), gamma_ab,
                    cut=(("B",), ("A",)), restarts=max(2, config.restarts // 2),
                    seed=seed)
    povm_b = inner.witness.structure["a_povm"]
    projs_a = inner.witness.structure["b_projectors"]
    # conditional likelihood-ratio blocks on A per measure-side outcome
    rho_m = permute(rho_ab, ("B", "A")).entries
    gam_m = permute(gout.gamma_ab, ("B", "A")).entries
    fblocks = []
    for x, q in enumerate(povm_b):
        f = np.zeros((2, 2), dtype=complex)
        for pz in projs_a[x]:
            eff = np.kron(q, pz)
            p = float(np.real(np.trace(eff @ rho_m)))
            qq = float(np.real(np.trace(eff @ gam_m)))
            lam = max(p, 1e-12) / max(qq, 1e-12)
            f += lam * pz
        f += 1e-8 * np.eye(2)
        fblocks.append(f)
    x_cq = list(zip(fblocks, povm_b))
    # rebuild the hat state for this X
    gout2 = gamma_construction(rho, sigma_dec, x_cq, rule,
                               labels=("A", "B", "C"))
    gamma_hat = gout2.gamma_hat_ac
    y_val = d_all(state(rho_ac.entries, rho_ac.layout),
                  state(gamma_hat.entries, gamma_hat.layout))
    basis = y_val.witness.structure["basis"]
    p, q = _born_pair(rho_ac.entries, gamma_hat.entries, basis)
    ratios = np.clip(p, 1e-12, None) / np.clip(q, 1e-12, None)
    y_op = (basis * ratios) @ basis.conj().T
    # chain terms
    tr_logx = sum(float(np.real(np.trace(
        np.kron(q_eff, _logm_psd(f)) @ permute(rho_ab, ("B", "A")).entries)))
        for f, q_eff in x_cq)
    tr_logy = float(np.real(np.trace(_logm_psd(y_op) @ rho_ac.entries)))
    trace_x_gamma = gout2.normalization
    trace_y_hat = float(np.real(np.trace(y_op @ gamma_hat.entries)))
    rhs = tr_logx + tr_logy - math.log(max(trace_x_gamma * trace_y_hat, 1e-300))
    sig_state = state(sigma_dec.assemble().entries, sigma_dec.layout)
    lhs = cqmi(rho, "A", "B", "C") + float(
        umegaki(state(rho_ac.entries, rho_ac.layout), sig_state))
    return {"lhs": lhs, "rhs": rhs, "slack": lhs - rhs,
            "tr_logx": tr_logx, "tr_logy": tr_logy,
            "x_gamma": trace_x_gamma, "y_hat": trace_y_hat}


def _born_pair(rho, sigma, basis):
    p = np.clip(np.real(np.einsum("id,de,ei->i", basis.conj().T, rho, basis)), 0, None)
    q = np.clip(np.real(np.einsum("id,de,ei->i", basis.conj().T, sigma, basis)), 0, None)
    return p, q


@_register("sq_chain", "the one-way measured entanglement dominates the "
           "negative log restricted fidelity, which dominates a quarter of "
           "the squared restricted norm", "(2,2)", strict=False,
           tolerance="tol_heur")
def _check_sq_chain(config, trial_seed, st=None):
    rho = st or _rand_state(layout(A=2, B=2), trial_seed, "sq_chain")
    r = config.restarts
    em = ree_measured(rho, (("B",), ("A",)), "LOCC1", restarts=max(2, r // 2),
                      seed=trial_seed)
    sig = _sep_witness_state(em.sigma_witness)
    d_est = em.value
    f_est, n_est = restricted_fid_norm(rho, sig, "LOCC1", cut=(("B",), ("A",)),
                                       restarts=max(2, r // 2), seed=trial_seed)
    g1 = d_est - (-math.log(max(f_est, 1e-300)))
    g2 = (-math.log(max(f_est, 1e-300))) - n_est ** 2 / 4
    return dict(lhs=min(g1, g2), rhs=0.0,
                directions={"measured_estimate": "lower (witness)",
                            "fidelity_estimate": "upper (class optimum)",
                            "norm_estimate": "lower (class optimum)",
                            "link1": g1, "link2": g2})


@_register("state_redistribution", "conditional mutual information dominates "
           "the measured entanglement to the joint cut minus the exact "
           "entanglement of the conditioned cut", "(2,2,2)", strict=False,
           tolerance="tol_heur")
def _check_state_redistribution(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "state_redist")
    r = config.restarts
    e_all_abc = ree_measured(rho, (("A",), ("B", "C")), "ALL",
                             restarts=max(2, r // 2), seed=trial_seed)
    rho_ac = state(partial_trace(rho.op, "B").entries, layout(A=2, C=2))
    e_ac = ree(rho_ac, (("A",), ("C",)), restarts=r, seed=trial_seed)
    lhs = cqmi(rho, "A", "B", "C") + e_ac.value
    rhs = e_all_abc.value
    return dict(lhs=lhs, rhs=rhs,
                directions={"cqmi": "exact", "ree_ac": "upper",
                            "ree_all_joint": "heuristic"})


@_register("post_li_winter", "entanglement to the joint cut dominates the "
           "one-way measured entanglement of one pair plus the measured "
           "entanglement of the other", "(2,2,2)", strict=False,
           tolerance="tol_heur")
def _check_post_li_winter(config, trial_seed, st=None):
    rho = st or _rand_state(_qubits(3), trial_seed, "post_li_winter")
    r = config.restarts
    e_joint = ree(rho, (("A",), ("B", "C")), restarts=r, seed=trial_seed)
    rho_ab = state(partial_trace(rho.op, "C").entries, layout(A=2, B=2))
    rho_ac = state(partial_trace(rho.op, "B").entries, layout(A=2, C=2))
    e_locc1 = ree_measured(rho_ab, (("B",), ("A",)), "LOCC1",
                           restarts=max(2, r // 2), seed=trial_seed)
    e_all = ree_measured(rho_ac, (("A",), ("C",)), "ALL",
                         restarts=max(2, r // 2), seed=trial_seed)
    return dict(lhs=e_joint.value, rhs=e_locc1.value + e_all.value,
                directions={"ree_joint": "upper",
                            "ree_locc1": "heuristic", "ree_all": "heuristic"})


@_register("cemi_recover_meas", "the symmetric conditional mutual information "
           "dominates the measured divergence to the two-sided averaged "
           "recovery of the ancilla marginal", "(2,2,2,2)", strict=False,
           tolerance="tol_heur")
def _check_cemi_recover_meas(config, trial_seed, st=None):
    lay = _qubits(4, ["A", "Ab", "B", "Bb"])
    rho = st or _rand_state(lay, trial_seed, "cemi_meas")
    rule = beta0_rule(config.quad_n)
    rho_abar = partial_trace(rho.op, ("B", "Bb"))
    rho_bbar = partial_trace(rho.op, ("A", "Ab"))
    inner = partial_trace(rho.op, ("A", "B"))
    rec = averaged_recover(inner, rule, [(rho_abar, "A"), (rho_bbar, "B")])
    rec = permute(rec, rho.layout.labels)
    meas = d_all(rho, state(rec.entries / rec.trace().real, rho.layout))
    lhs = cemi_term(rho, "A", "Ab", "B", "Bb")
    return dict(lhs=lhs, rhs=meas.value,
                directions={"lhs": "exact", "rhs": "lower (witness)"} ,
                incomplete=meas.diagnostics.get("gap", 0) > 1e-4)


def _cemi_like_check(kind):
    """Shared runner for the separable (kind='sepp') and PPT (kind='ppt')
    faithfulness bounds on four-party states, including the strict
    four-matrix witness chain."""

    def run(config, trial_seed, st=None):
        lay = _qubits(4, ["A", "Ab", "B", "Bb"])
        rho = st or _rand_state(lay, trial_seed, f"cemi_{kind}")
        r = config.restarts
        rule = beta0_rule(config.quad_n)
        rho_ab = state(partial_trace(rho.op, ("Ab", "Bb")).entries,
                       layout(A=2, B=2))
        rho_inner = state(partial_trace(rho.op, ("A", "B")).entries,
                          layout(Ab=2, Bb=2))
        rho_abar = partial_trace(rho.op, ("B", "Bb"))
        rho_bbar = partial_trace(rho.op, ("A", "Ab"))
        lhs_term = cemi_term(rho, "A", "Ab", "B", "Bb")

        if kind == "sepp":
            outer_inner = ree(rho_inner, (("Ab",), ("Bb",)), restarts=r,
                              seed=trial_seed)
            sig_inner = outer_inner.sigma_witness
            sig_state = _sep_witness_state(sig_inner)
            e_all_inner = ree_measured(rho_inner, (("Ab",), ("Bb",)), "ALL",
                                       restarts=max(2, r // 2), seed=trial_seed)
            base_ab = ree(rho_ab, (("A",), ("B",)), restarts=r, seed=trial_seed)
            inner_ab = cone_bound(rho_ab, _sep_witness_state(base_ab.sigma_witness),
                                  "SEPP", cut=(("A",), ("B",)), seed=trial_seed)
            lhs = lhs_term + outer_inner.value - e_all_inner.value
            rhs = inner_ab.value
            gamma, gamma_dec = averaged_recover_decomposition(
                sig_inner, rule, [(rho_abar, "A"), (rho_bbar, "B")],
                (("A", "Ab"), ("B", "Bb")))
            dir_note = {"e_sepp_ab": "upper (cone at feasible witness)",
                        "e_inner": "upper", "e_all_inner": "heuristic"}
        else:
            outer_inner = ppt_ree(rho_inner, (("Ab",), ("Bb",)), restarts=r,
                                  seed=trial_seed)
            sig_state = state(outer_inner.sigma_witness,
                              outer_inner.diagnostics["layout"])
            all_at_witness = d_all(rho_inner, sig_state)
            base_ab = ppt_ree(rho_ab, (("A",), ("B",)), restarts=r,
                              seed=trial_seed)
            inner_ab = cone_bound(
                rho_ab, state(base_ab.sigma_witness,
                              base_ab.diagnostics["layout"]),
                "PPT", cut=(("A",), ("B",)), seed=trial_seed)
            lhs = lhs_term + outer_inner.value - all_at_witness.value
            rhs = inner_ab.value
            gamma = averaged_recover(sig_state.op, rule,
                                     [(rho_abar, "A"), (rho_bbar, "B")])
            gamma_dec = None
            dir_note = {"p_ppt_ab": "upper (cone at feasible witness)",
                        "p_inner": "upper", "p_all_inner": "lower (witness)"}

        gamma = permute(gamma, ("A", "Ab", "B", "Bb"))
        gamma_ab = partial_trace(gamma, ("Ab", "Bb"))
        # four-matrix witness chain:
        # cemi + D(rho_inner || sigma) >= tr[rho_AB log X] +
        #   tr[rho_inner log Y] - log tr[(X (x) Y) gamma]
        x_w = cone_bound(rho_ab, state(gamma_ab.entries / gamma_ab.trace().real,
                                       gamma_ab.layout),
                         "SEPP" if kind == "sepp" else "PPT",
                         cut=(("A",), ("B",)), seed=trial_seed)
        x_op = x_w.witness.operator + 1e-9 * np.eye(4)
        gamma_ord = permute(gamma, ("A", "B", "Ab", "Bb")).entries
        gt = gamma_ord.reshape(4, 4, 4, 4)
        ghat_raw = np.einsum("ab,aibj->ij", x_op.T, gt)
        norm_x = float(np.real(np.trace(ghat_raw)))
        ghat = ghat_raw / norm_x
        y_val = d_all(rho_inner, state((ghat + ghat.conj().T) / 2,
                                       rho_inner.layout))
        basis = y_val.witness.structure["basis"]
        p, q = _born_pair(rho_inner.entries, ghat, basis)
        ratios = np.clip(p, 1e-12, None) / np.clip(q, 1e-12, None)
        y_op = (basis * ratios) @ basis.conj().T
        tr_logx = float(np.real(np.trace(_logm_psd(x_op) @ rho_ab.entries)))
        tr_logy = float(np.real(np.trace(_logm_psd(y_op) @ rho_inner.entries)))
        xy = np.kron(x_op, y_op)
        tr_xy = float(np.real(np.trace(xy @ gamma_ord)))
        chain_rhs = tr_logx + tr_logy - math.log(max(tr_xy, 1e-300))
        chain_lhs = lhs_term + float(umegaki(rho_inner, sig_state))
        chain = {"lhs": chain_lhs, "rhs": chain_rhs,
                 "slack": chain_lhs - chain_rhs}
        witnesses = {"chain": chain}
        if kind == "ppt":
            # transpose-commutation identity and PPT inheritance of gamma
            anchor = state(rho_bbar.entries, rho_bbar.layout)
            tw = transpose_twirl_identity(anchor, "B", 0.7)
            pt = partial_transpose(gamma, ("B", "Bb"))
            witnesses["transpose_identity_deviation"] = tw
            witnesses["gamma_pt_min_eig"] = float(
                np.linalg.eigvalsh(pt.entries).min())
        dir_note["witness_chain_slack"] = chain["slack"]
        return dict(lhs=lhs, rhs=rhs, directions=dir_note, witnesses=witnesses)

    return run


_register("cemi_main", "the symmetric conditional mutual information is "
          "bounded below by the separably measured entanglement of the "
          "visible pair minus the measured-vs-exact gap of the ancilla pair",
          "(2,2,2,2)", strict=False,
          tolerance="tol_heur")(_cemi_like_check("sepp"))
_register("cemi_ppt", "the PPT analogue of the faithfulness bound, with "
          "both the state set and the measurement cone PPT",
          "(2,2,2,2)", strict=False,
          tolerance="tol_heur")(_cemi_like_check("ppt"))


@_register("piani_cemi", "the symmetric conditional mutual information "
           "dominates the measured entanglement of the doubled cut minus the "
           "exact entanglement of the ancilla pair", "(2,2,2,2)",
           strict=False, tolerance="tol_heur")
def _check_piani_cemi(config, trial_seed, st=None):
    lay = _qubits(4, ["A", "Ab", "B", "Bb"])
    rho = st or _rand_state(lay, trial_seed, "piani_cemi")
    r = config.restarts
    e_all_big = ree_measured(rho, (("A", "Ab"), ("B", "Bb")), "ALL",
                             restarts=max(2, r // 2), seed=trial_seed)
    rho_inner = state(partial_trace(rho.op, ("A", "B")).entries,
                      layout(Ab=2, Bb=2))
    e_inner = ree(rho_inner, (("Ab",), ("Bb",)), restarts=r, seed=trial_seed)
    lhs = cemi_term(rho, "A", "Ab", "B", "Bb") + e_inner.value
    return dict(lhs=lhs, rhs=e_all_big.value,
                directions={"cemi": "exact", "ree_inner": "upper",
                            "ree_all_big": "heuristic"})


@_register("piani_superadd_sepp", "entanglement of a doubled cut dominates "
           "the separably measured entanglement of one pair plus the "
           "entanglement of the other", "(2,2,2,2)", strict=False,
           tolerance="tol_heur")
def _check_piani_superadd_sepp(config, trial_seed, st=None):
    lay = _qubits(4, ["A", "Ab", "B", "Bb"])
    rho = st or _rand_state(lay, trial_seed, "piani_sepp")
    r = config.restarts
    big = ree(rho, (("A", "Ab"), ("B", "Bb")), restarts=r, seed=trial_seed,
              max_iter=400)
    rho_ab = state(partial_trace(rho.op, ("Ab", "Bb")).entries, layout(A=2, B=2))
    rho_inner = state(partial_trace(rho.op, ("A", "B")).entries,
                      layout(Ab=2, Bb=2))
    # conservatively low stand-in for the separably measured term
    e_low = ree_measured(rho_ab, (("A",), ("B",)), "LOCC1",
                         restarts=max(2, r // 2), seed=trial_seed)
    e_inner = ree(rho_inner, (("Ab",), ("Bb",)), restarts=r, seed=trial_seed)
    return dict(lhs=big.value, rhs=e_low.value + e_inner.value,
                tolerance=5e-3,
                directions={"ree_big": "upper", "sepp_standin": "heuristic-low",
                            "ree_inner": "upper"})


@_register("piani_superadd_ppt", "the PPT analogue of super-additivity across "
           "a doubled cut", "(2,2,2,2)", strict=False, tolerance="tol_heur")
def _check_piani_superadd_ppt(config, trial_seed, st=None):
    lay = _qubits(4, ["A", "Ab", "B", "Bb"])
    rho = st or _rand_state(lay, trial_seed, "piani_ppt")
    r = config.restarts
    big = ppt_ree(rho, (("A", "Ab"), ("B", "Bb")), restarts=r, seed=trial_seed)
    rho_ab = state(partial_trace(rho.op, ("Ab", "Bb")).entries, layout(A=2, B=2))
    rho_inner = state(partial_trace(rho.op, ("A", "B")).entries,
                      layout(Ab=2, Bb=2))
    inner_p = ppt_ree(rho_inner, (("Ab",), ("Bb",)), restarts=r, seed=trial_seed)
    base_ab = ppt_ree(rho_ab, (("A",), ("B",)), restarts=r, seed=trial_seed)
    low_ab = d_lo(rho_ab, state(base_ab.sigma_witness,
                                base_ab.diagnostics["layout"]),
                  cut=(("A",), ("B",)), restarts=max(2, r // 2),
                  seed=trial_seed)
    return dict(lhs=big.value, rhs=low_ab.value + inner_p.value,
                tolerance=5e-3,
                directions={"ppt_big": "upper", "ppt_measured_standin":
                            "lower (witness)", "ppt_inner": "upper"})


@_register("cemi_multi_faithful", "the three-party symmetric conditional "
           "mutual information dominates the tripartite separably measured "
           "(and PPT) entanglement differences", "(2,)*6", strict=False,
           tolerance="tol_heur")
def _check_cemi_multi_faithful(config, trial_seed, st=None):
    lay = SystemLayout(("A", "Ab", "B", "Bb", "C", "Cb"), (2,) * 6)
    rho = st or _rand_state(lay, trial_seed, "cemi_multi")
    r = max(2, config.restarts // 2)
    lhs_term = cemi_term3(rho, "A", "Ab", "B", "Bb", "C", "Cb")
    parts_outer = (("A",), ("B",), ("C",))
    parts_inner = (("Ab",), ("Bb",), ("Cb",))
    rho_abc = state(partial_trace(rho.op, ("Ab", "Bb", "Cb")).entries,
                    layout(A=2, B=2, C=2))
    rho_inner = state(partial_trace(rho.op, ("A", "B", "C")).entries,
                      layout(Ab=2, Bb=2, Cb=2))
    # separable route
    e_inner = ree(rho_inner, parts_inner, restarts=r, seed=trial_seed)
    e_all_inner = ree_measured(rho_inner, parts_inner, "ALL", restarts=r,
                               seed=trial_seed)
    base_abc = ree(rho_abc, parts_outer, restarts=r, seed=trial_seed)
    sepp_abc = cone_bound(rho_abc, _sep_witness_state(base_abc.sigma_witness),
                          "SEPP", cut=parts_outer, seed=trial_seed)
    gap_sepp = lhs_term + e_inner.value - e_all_inner.value - sepp_abc.value
    # PPT route
    p_inner = ppt_ree(rho_inner, parts_inner, restarts=r, seed=trial_seed)
    sigp = state(p_inner.sigma_witness, p_inner.diagnostics["layout"])
    p_all_inner = d_all(rho_inner, sigp)
    basep = ppt_ree(rho_abc, parts_outer, restarts=r, seed=trial_seed)
    ppt_abc = cone_bound(rho_abc, state(basep.sigma_witness,
                                        basep.diagnostics["layout"]),
                         "PPT", cut=parts_outer, seed=trial_seed)
    gap_ppt = lhs_term + p_inner.value - p_all_inner.value - ppt_abc.value
    return dict(lhs=min(gap_sepp, gap_ppt), rhs=0.0,
                directions={"separable_route_gap": gap_sepp,
                            "ppt_route_gap": gap_ppt,
                            "outer_terms": "upper (cone at feasible witness)",
                            "inner_measured": "heuristic"})


@_register("locc1_dpi", "one-way measured relative entropy is monotone under "
           "one-way channels, exactly at the witness level via the adjoint "
           "construction", "(2,2)", strict=False, tolerance="tol_heur")
def _check_locc1_dpi(config, trial_seed, st=None):
    lay = layout(A=2, B=2)
    rho = st or _rand_state(lay, trial_seed, "dpi_rho")
    sig = _rand_state(lay, trial_seed, "dpi_sig")
    chan = sample("one_way_locc_channel", lay, trial_seed + 11, branches=2)
    out_r = state(chan.apply(rho.op).entries, lay)
    out_s = state(chan.apply(sig.op).entries, lay)
    r = config.restarts
    v_out = d_locc1(out_r, out_s, cut=(("A",), ("B",)), restarts=r,
                    seed=trial_seed)
    v_in = d_locc1(rho, sig, cut=(("A",), ("B",)), restarts=r, seed=trial_seed)
    v_pb = pushback_value(chan, v_out.witness, rho, sig)
    return dict(lhs=v_in.value, rhs=v_out.value, tolerance=1e-4,
                directions={"input_estimate": "lower (witness)",
                            "output_estimate": "lower (witness)",
                            "pushback_value": v_pb,
                            "pushback_exact_slack": v_pb - v_out.value})


# ---------------------------------------------------------------------------
# execution

def run_check(check_id: str, config: CheckConfig | None = None, st=None,
              trial: int = 0) -> GapReport:
    """Run one check; ``st`` overrides the default sampled input."""
    if check_id not in _REGISTRY:
        raise ParameterError(f"unknown check {check_id!r}")
    spec = _REGISTRY[check_id]
    config = config or CheckConfig()
    trial_seed = derive_trial_seed(config.seed, trial)
    out = spec.runner(config, trial_seed, st)
    tol = out.pop("tolerance", None)
    return _report(spec, config, trial, out["lhs"], out["rhs"],
                   out.get("directions"), out.get("witnesses"),
                   budget={"restarts": config.restarts,
                           "quad_n": config.quad_n,
                           "iter_cap": config.iter_cap,
                           "seed": config.seed, "trial_seed": trial_seed},
                   incomplete=out.get("incomplete", False), tolerance=tol)


def derive_trial_seed(seed: int, trial: int) -> int:
    return (int(seed) * 1000003 + 7919 * int(trial)) % (2 ** 62)


@dataclass
class SweepSummary:
    check: str
    trials: int
    min_gap: float
    p05_gap: float
    max_gap: float
    violations: int
    incomplete: int
    strict: bool

    def csv_row(self) -> str:
        return (f"{self.check},{self.trials},{self.min_gap:.12g},"
                f"{self.p05_gap:.12g},{self.violations}")


CSV_HEADER = "check,trials,min_gap,p05_gap,violations"


def _sweep_task(args):
    check_id, cfg_doc, trial = args
    return run_check(check_id, CheckConfig(**cfg_doc), trial=trial)


def run_sweep(check_id: str, trials: int, config: CheckConfig | None = None,
              parallelism: int | None = None):
    """Run ``trials`` independent instances of a check.

    Per-trial seeds derive from (sweep seed, trial index); trials fan out to
    worker processes and reports are assembled in trial order, so the output
    is independent of the degree of parallelism.
    """
    config = config or CheckConfig()
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    par = max_threads(parallelism if parallelism is not None
                      else config.parallelism)
    if par > 1 and trials > 1:
        from concurrent.futures import ProcessPoolExecutor
        tasks = [(check_id, config.to_dict(), i) for i in range(trials)]
        with ProcessPoolExecutor(max_workers=par) as pool:
            reports = list(pool.map(_sweep_task, tasks))
    else:
        reports = [run_check(check_id, config, trial=i) for i in range(trials)]
    gaps = np.array([r.gap for r in reports])
    summary = SweepSummary(
        check=check_id, trials=trials,
        min_gap=float(gaps.min()), p05_gap=float(np.quantile(gaps, 0.05)),
        max_gap=float(gaps.max()),
        violations=int(sum(r.violated for r in reports)),
        incomplete=int(sum(r.incomplete for r in reports)),
        strict=_REGISTRY[check_id].strict)
    return reports, summary


def reports_to_json(reports, summary, config) -> dict:
    return {
        "config": config.to_dict(),
        "summary": {
            "check": summary.check, "trials": summary.trials,
            "min_gap": summary.min_gap, "p05_gap": summary.p05_gap,
            "max_gap": summary.max_gap, "violations": summary.violations,
            "incomplete": summary.incomplete, "strict": summary.strict,
        },
        "reports": [r.to_json() for r in reports],
    }
