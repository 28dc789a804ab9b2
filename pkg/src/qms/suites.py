"""Named check suites run by the command-line front-end.

Each suite takes the parsed scenario data and returns a list of check
records {name, residual, tolerance, pass}.  Suites are deterministic for a
fixed scenario and seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .bimodule import Derivation, FinBimodule, carre_du_champ
from .config import DEFAULT_TOL
from .errors import QMSError
from .fock import correspondence_from_jumps, fock_build, free_aw
from .lindblad import (JumpSystem, build_generator, certify, dirichlet_form,
                       extract_alicki)
from .modular import WeightedAlgebra
from .numkernel import Superoperator
from .reconstruct import build_gram_space, gram_axioms_check, uniqueness_isometry
from .sampling import random_matrix

__all__ = ["ScenarioData", "SUITES", "run_suite", "suite_names"]


@dataclass
class ScenarioData:
    """Parsed scenario payload: the algebra plus exactly one source."""

    W: WeightedAlgebra
    system: JumpSystem = None
    generator: Superoperator = None
    cp_map: Superoperator = None
    fock_spec: dict = None
    name: str = ""
    extras: dict = field(default_factory=dict)


def _check(name, residual, tolerance):
    residual = float(residual)
    return {"name": name, "residual": residual, "tolerance": float(tolerance),
            "pass": bool(residual <= tolerance)}


def _need_system(data: ScenarioData, tol):
    if data.system is not None:
        return data.system
    if data.generator is not None:
        return extract_alicki(data.generator, data.W, tol)
    raise QMSError("suite needs a jump system or a generator")


def _need_generator(data: ScenarioData):
    if data.generator is not None:
        return data.generator
    if data.system is not None:
        return build_generator(data.system)
    raise QMSError("suite needs a generator or a jump system")


def suite_alicki_validate(data, tol, seed):
    system = _need_system(data, tol)
    res = system.validate()
    return [_check(f"alicki/{k}", v, tol.roundtrip) for k, v in sorted(res.items())]


def suite_certify_generator(data, tol, seed):
    l = _need_generator(data)
    rep = certify(l, data.W, tol)
    out = []
    for k, v in sorted(rep.residuals.items()):
        if k == "min_choi_eig":
            out.append(_check("certify/choi_positive", max(-v, 0.0), tol.choi))
        else:
            out.append(_check(f"certify/{k}", v, tol.axiom))
    return out


def suite_triple_agreement(data, tol, seed):
    system = _need_system(data, tol)
    l = build_generator(system)
    w = data.W
    form = dirichlet_form(l, w, tol)
    bim = FinBimodule(system, tol)
    gram = build_gram_space(form, w, tol)
    n = w.n
    units = _units(n)
    d_form_bim = 0.0
    d_form_gram = 0.0
    d_bim_gram = 0.0
    for a in units:
        for b in units:
            e_form = form(a, b)
            e_bim = bim.inner(bim.delta(a), bim.delta(b))
            e_gram = gram.inner(gram.delta(a), gram.delta(b))
            d_form_bim = max(d_form_bim, abs(e_form - e_bim))
            d_form_gram = max(d_form_gram, abs(e_form - e_gram))
            d_bim_gram = max(d_bim_gram, abs(e_bim - e_gram))
    return [
        _check("triple/form_vs_bimodule", d_form_bim, tol.axiom),
        _check("triple/form_vs_gram", d_form_gram, tol.axiom),
        _check("triple/bimodule_vs_gram", d_bim_gram, tol.axiom),
    ]


def suite_uniqueness(data, tol, seed):
    system = _need_system(data, tol)
    l = build_generator(system)
    form = dirichlet_form(l, data.W, tol)
    bim = FinBimodule(system, tol)
    gram = build_gram_space(form, data.W, tol)
    u = uniqueness_isometry(gram, bim, tol)
    return [
        _check("uniqueness/isometry", u["relative_residual"], tol.roundtrip),
        _check("uniqueness/rank_match",
               0.0 if u["ranks_agree"] else 1.0, 0.5),
    ]


def suite_bimodule_axioms(data, tol, seed):
    system = _need_system(data, tol)
    # no up-front structural validation here: a broken jump system should
    # surface as a failing axiom residual, not as an exception
    bim = FinBimodule(system, tol, validate=False)
    res = bim.axioms_check(n_vectors=200, seed=seed)
    out = [_check(f"axiom ({k})", v, tol.axiom) for k, v in sorted(res.items())]
    l = build_generator(system, validate=False)
    form = dirichlet_form(l, data.W, tol, skip_certify=True)
    der = Derivation(bim)
    dres = der.check(form, n_samples=50, seed=seed)
    out.extend(_check(f"derivation/{k}", v, tol.axiom)
               for k, v in sorted(dres.items()))
    return out


def suite_stinespring_rate(data, tol, seed):
    from .reconstruct import stinespring_rate
    system = _need_system(data, tol)
    l = build_generator(system)
    form = dirichlet_form(l, data.W, tol)
    r = stinespring_rate(l, data.W, form)
    slope_dev = abs(r["slope"] - 1.0)
    return [
        _check("stinespring/slope_dev", slope_dev, 0.2),
        _check("stinespring/route_gap", r["route_gap"], tol.axiom),
    ]


def suite_carre_positivity(data, tol, seed):
    system = _need_system(data, tol)
    l = build_generator(system)
    w = data.W
    form = dirichlet_form(l, w, tol)
    bim = FinBimodule(system, tol)
    rng = np.random.default_rng(seed)
    worst_neg = 0.0
    worst_cons = 0.0
    for _ in range(100):
        a = random_matrix(w.n, rng)
        g = carre_du_champ(form, a, a)
        ev = np.linalg.eigvals(g)
        worst_neg = max(worst_neg, max(-ev.real.min(), 0.0))
        da = bim.delta(a)
        direct = w.h_sqrt @ sum(
            da.comps[j].conj().T @ da.comps[j] for j in range(bim.m)
        ) @ w.h_isqrt
        worst_cons = max(worst_cons, np.linalg.norm(g - direct)
                         / max(np.linalg.norm(direct), 1e-300))
    return [
        _check("carre/psd", worst_neg, tol.axiom),
        _check("carre/consistency", worst_cons, tol.axiom),
    ]


def suite_fock_commutant(data, tol, seed):
    system = _need_system(data, tol)
    h = correspondence_from_jumps(system)
    f = fock_build(h, d_max=3, tol=tol)
    s_basis = h.s_fixed_basis()
    f_basis = h.f_fixed_basis()
    worst = 0.0
    for xi in s_basis[:3]:
        for eta in f_basis[:3]:
            worst = max(worst, f.commutant_check(xi, eta))
    rng = np.random.default_rng(seed)
    xs = [random_matrix(data.W.n, rng) for _ in range(5)]
    xis = [rng.standard_normal(h.d) + 1j * rng.standard_normal(h.d)
           for _ in range(5)]
    lam = f.lambda_identities(xs, xis)
    return [
        _check("fock/commutant", worst, tol.axiom),
        _check("fock/lambda_pi_left", lam["pi_left"], tol.check),
        _check("fock/lambda_s_vector", lam["s_vector"], tol.check),
    ]


def suite_free_aw_derivation(data, tol, seed):
    spec = data.fock_spec
    if spec is None:
        raise QMSError("suite needs a fock_spec source")
    f = free_aw(spec["A"], spec.get("I"), spec.get("depth", 4), tol)
    rng = np.random.default_rng(seed)
    worst_pair = 0.0
    for layer in range(1, f.d_max + 1):
        dim = f.dims[layer]
        xi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        got = f.derivation_pairing(xi, layer, xi, layer)
        worst_pair = max(worst_pair,
                         abs(got - layer * np.vdot(xi, xi))
                         / max(abs(np.vdot(xi, xi)), 1e-300))
    t = 0.37
    mu = f.modular_unitary(t)
    ou = f.ou_semigroup(0.51)
    comm = np.linalg.norm(mu @ ou - ou @ mu) / max(np.linalg.norm(ou), 1e-300)
    # E(xi) = <xi, N xi> equals the derivation pairing summed over layers
    full = rng.standard_normal(f.D) + 1j * rng.standard_normal(f.D)
    e_direct = f.energy(full)
    e_sum = sum(
        f.derivation_pairing(f.layer_block(full, k), k,
                             f.layer_block(full, k), k)
        for k in range(f.d_max + 1)
    )
    return [
        _check("free_aw/derivation_pairing", worst_pair, tol.check),
        _check("free_aw/ou_modular_commute", comm, tol.check),
        _check("free_aw/energy_identity",
               abs(e_direct - e_sum) / max(abs(e_direct), 1e-300), tol.check),
        _check("free_aw/commutation", f.commutation_residual, tol.roundtrip),
    ]


def suite_gram_axioms(data, tol, seed):
    system = _need_system(data, tol)
    l = build_generator(system)
    form = dirichlet_form(l, data.W, tol)
    gram = build_gram_space(form, data.W, tol)
    res = gram_axioms_check(gram, n_samples=60, seed=seed)
    return [_check(f"gram axiom ({k})", v, tol.axiom)
            for k, v in sorted(res.items())]


def _units(n):
    out = []
    e = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            e[i, j] = 1.0
            out.append(e.copy())
            e[i, j] = 0.0
    return out


SUITES = {
    "alicki-validate": (suite_alicki_validate,
                        "four structural conditions of the jump system"),
    "bimodule-axioms": (suite_bimodule_axioms,
                        "Tomita-bimodule axioms (a)-(f) and derivation checks"),
    "carre-positivity": (suite_carre_positivity,
                         "carre du champ is PSD and matches the derivation"),
    "certify-generator": (suite_certify_generator,
                          "Markovianity and symmetry certificates"),
    "fock-commutant": (suite_fock_commutant,
                       "s/t commutation and vacuum identities on Fock space"),
    "free-aw-derivation": (suite_free_aw_derivation,
                           "scalar free Araki-Woods derivation identities"),
    "gram-axioms": (suite_gram_axioms,
                    "Tomita-bimodule axioms on the reconstructed quotient"),
    "stinespring-rate": (suite_stinespring_rate,
                         "first-order recovery of the form from semigroup maps"),
    "triple-agreement": (suite_triple_agreement,
                         "form = explicit pairing = reconstructed pairing"),
    "uniqueness": (suite_uniqueness,
                   "isometry between reconstructed and explicit bimodules"),
}


def suite_names():
    return sorted(SUITES)


def run_suite(name, data: ScenarioData, tol=DEFAULT_TOL, seed=0):
    fn, _ = SUITES[name]
    return fn(data, tol, seed)
