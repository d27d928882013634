"""Quick invariant suites, one per module (used by ``holoq verify``).

Each suite returns a list of :class:`Check`.  The suites are small versions
of the test-suite properties and finish in a few seconds altogether.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from . import biortho, bundles, dynamics, gaugeholo, tripod
from .errors import NonDiagonalizable

ALPHA, DELTA = 0.6, 1.0


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    sense: str = "below"  # "above": the value has to exceed the threshold

    def as_dict(self) -> dict:
        return asdict(self)


def below(name, value, threshold) -> Check:
    value = float(value)
    return Check(name, value, float(threshold), bool(value < threshold))


def above(name, value, threshold) -> Check:
    value = float(value)
    return Check(name, value, float(threshold), bool(value > threshold), "above")


def suite_biortho() -> list[Check]:
    herm, bio, rec = [], [], []
    for seed in range(12):
        H, eta = biortho.random_pseudo_hermitian(2 + seed % 7, seed)
        sys = biortho.biorthogonal_eig(H)
        herm.append(biortho.pseudo_hermiticity_residual(H, eta))
        bio.append(sys.biorthonormality_residual())
        rec.append(sys.reconstruction_residual())
    try:
        biortho.biorthogonal_eig([[0, 1], [0, 0]])
        jordan = 0.0
    except NonDiagonalizable:
        jordan = 1.0
    return [below("biortho.pseudo_hermiticity", max(herm), 1e-10),
            below("biortho.biorthonormality", max(bio), 1e-10),
            below("biortho.reconstruction", max(rec), 1e-10),
            above("biortho.jordan_block_rejected", jordan, 0.5)]


def _field_errors(chart, points):
    fam = tripod.chart_family(chart, ALPHA, DELTA)
    ref = tripod.dark_frame(chart, ALPHA, DELTA)
    big, small = 0.0, 0.0
    for p in points:
        f = gaugeholo.project_reference(gaugeholo.level_frame(fam, p), ref(p))
        A = gaugeholo.gauge_field(fam, f, reference=ref).components
        if chart == "u1":
            expected = np.zeros_like(A)
            expected[1, 1, 1] = -np.sin(p[0] / 2) ** 2
            big = max(big, abs(A[1, 1, 1] - expected[1, 1, 1]))
            small = max(small, np.max(np.abs(np.delete(A.ravel(), 7))))
        else:
            big = max(big, np.max(np.abs(A[1] - np.cos(p[0]) * tripod.SIGMA_Y)))
            small = max(small, np.max(np.abs(A[0])))
    return big, small


def suite_gaugeholo() -> list[Check]:
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(0.1, 3.0, 8), rng.uniform(0, 2 * np.pi, 8)])
    out = []
    for chart in ("u1", "u2"):
        big, small = _field_errors(chart, pts)
        out += [below(f"gaugeholo.{chart}.field_closed_form", big, 1e-6),
                below(f"gaugeholo.{chart}.field_vanishing_components", small, 1e-8)]
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    anti = max(gaugeholo.antihermiticity_residual(fam, gaugeholo.level_frame(fam, p)) for p in pts[:4])
    out.append(below("gaugeholo.antihermiticity", anti, 1e-8))
    loop = tripod.chart_rectangle(np.pi / 3)
    fwd = gaugeholo.holonomy_of_loop(fam, loop, reference=tripod.dark_frame("u2", ALPHA, DELTA), n_steps=1000)
    back = gaugeholo.holonomy_of_loop(fam, loop.reversed(), reference=tripod.dark_frame("u2", ALPHA, DELTA),
                                      n_steps=1000)
    # both are expressed in the same base frame
    out.append(below("gaugeholo.reversal_inverse", np.linalg.norm(back.matrix @ fwd.matrix - np.eye(2)), 1e-8))
    return out


def suite_tripod() -> list[Check]:
    out = []
    for chart, fn in (("u1", tripod.gate_u1), ("u2", tripod.gate_u2)):
        rep = fn(tripod.chart_rectangle(np.pi / 2), ALPHA, DELTA)
        out += [below(f"tripod.{chart}.gate_discrepancy", rep.discrepancy, 1e-6),
                below(f"tripod.{chart}.gate_pseudo_unitarity", rep.pseudo_unitarity_residual, 1e-8)]
    imag_max, herm, chart_dep = 0.0, 0.0, 0.0
    eta0 = tripod.metric(ALPHA, DELTA).matrix
    rng = np.random.default_rng(3)
    for chart in ("u1", "u2"):
        fam = tripod.chart_family(chart, ALPHA, DELTA)
        for p in np.column_stack([rng.uniform(0.05, 3.0, 6), rng.uniform(0, 2 * np.pi, 6)]):
            H = fam.at(p)
            imag_max = max(imag_max, np.max(np.abs(np.linalg.eigvals(H).imag)))
            herm = max(herm, biortho.pseudo_hermiticity_residual(H, eta0))
            chart_dep = max(chart_dep, np.max(np.abs(fam.metric(p) - eta0)))
    out += [below("tripod.real_spectrum", imag_max, 1e-10),
            below("tripod.pseudo_hermiticity", herm, 1e-10),
            below("tripod.metric_chart_independent", chart_dep, 1e-12)]
    p = tripod.TripodParams(ALPHA, DELTA, 0.3, 0.5 - 0.2j, 0.7)
    hc = tripod.hermitian_counterpart(p)
    out += [below("tripod.counterpart_hermitian", tripod.hermiticity_residual(hc.h), 1e-10),
            below("tripod.counterpart_tilde_hermitian", tripod.hermiticity_residual(hc.h_tilde), 1e-10)]
    grid = np.linspace(-np.pi, np.pi, 7)
    out.append(below("tripod.commutator_identity", max(tripod.commutator_check(a, b) for a in grid for b in grid),
                     1e-12))
    return out


def suite_dynamics() -> list[Check]:
    rng = np.random.default_rng(11)
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = h + h.conj().T
    X = rng.normal(size=(3, 3))
    sys = dynamics.synthetic_metric_system(h, X, 1.0)
    psi0 = np.array([1.0, 0.5j, -0.2])
    good = dynamics.norm_conservation_drift(dynamics.evolve(sys, psi0, 4000))
    bad = dynamics.norm_conservation_drift(dynamics.evolve(sys, psi0, 4000, generator="hamiltonian"))
    ode = max(dynamics.metric_ode_residual(sys, t) for t in rng.uniform(0.05, 0.95, 5))
    H = h / np.linalg.norm(h)
    const = dynamics.TimeDependentSystem.constant(H, duration=2.0)
    exact = scipy.linalg.expm(-2j * H) @ psi0
    rk = dynamics.evolve(const, psi0, 2000).final
    return [below("dynamics.eta_norm_drift", good, 1e-6),
            above("dynamics.control_drift_without_K", bad, 1e-2),
            below("dynamics.metric_ode", ode, 1e-6),
            below("dynamics.constant_H_vs_expm", np.linalg.norm(rk - exact), 1e-8)]


def suite_bundles() -> list[Check]:
    worst = {k: 0.0 for k in ("normalization", "idempotent", "self_adjoint", "trace", "group_action",
                              "metric_compat")}
    systems = []
    for seed in range(10):
        H, eta = biortho.random_pseudo_hermitian(2 + seed % 7, 100 + seed)
        systems.append((biortho.biorthogonal_eig(H), eta))
    fam = tripod.chart_family("u1", ALPHA, DELTA)
    p = np.array([0.8, 1.3])
    systems.append((biortho.biorthogonal_eig(fam.at(p)), fam.metric_at(p)))
    for k, (sys, eta) in enumerate(systems):
        for b in range(len(sys.blocks)):
            n = sys.blocks[b].size
            ea = bundles.random_metric(n, k + b)
            f = bundles.stiefel_frame(sys, b, ea, eta)
            g = bundles.grassmann_projector(f)
            worst["normalization"] = max(worst["normalization"], f.normalization_residual())
            worst["idempotent"] = max(worst["idempotent"], g.idempotency_residual())
            worst["self_adjoint"] = max(worst["self_adjoint"], g.self_adjoint_residual())
            worst["trace"] = max(worst["trace"], g.trace_residual(n))
            worst["metric_compat"] = max(worst["metric_compat"], g.metric_compatibility_residual())
            worst["group_action"] = max(worst["group_action"],
                                        bundles.group_action_invariance(f, bundles.random_pseudo_unitary(ea, k)))
    return [below(f"bundles.{k}", v, 1e-10) for k, v in worst.items()]


SUITES = {
    "biortho": suite_biortho,
    "gaugeholo": suite_gaugeholo,
    "tripod": suite_tripod,
    "dynamics": suite_dynamics,
    "bundles": suite_bundles,
}


def run_suites(names=None) -> list[Check]:
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    checks = []
    for n in names:
        checks += SUITES[n]()
    return checks
