import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from holoq import gaugeholo as gh
from holoq import tripod
from holoq.errors import GapClosure, LoopNotClosed, NotPseudoUnitary, StepTooLarge

from conftest import ALPHA, DELTA
from oracles import TwistedFamily, in_frame, pancharatnam_phase, richardson_wilson

SY = tripod.SIGMA_Y


def twisted_family(batched=True):
    tf = TwistedFamily()
    kw = dict(hamiltonian_batch=tf.hamiltonians, metric_batch=tf.metrics) if batched else {}
    fam = gh.HamiltonianFamily(lambda p: tf.hamiltonians(p)[0], 4, 2, metric=lambda p: tf.metrics(p)[0], **kw)
    return tf, fam


def spin_state(p):
    # lower eigenvector of n.sigma, smooth away from theta = pi
    th, ph = p
    return np.array([np.sin(th / 2), -np.cos(th / 2) * np.exp(1j * ph)])


def spin_family():
    def H(p):
        th, ph = p
        return np.array([[np.cos(th), np.sin(th) * np.exp(-1j * ph)],
                         [np.sin(th) * np.exp(1j * ph), -np.cos(th)]])
    return gh.HamiltonianFamily(H, 2, 2, name="spin")


def metric_family(fn, dim=2):
    # H = 0 (everything degenerate is avoided by a second level) and a prescribed metric
    return gh.HamiltonianFamily(lambda p: np.diag([0.0] * (dim - 1) + [1.0]), dim, 1, metric=fn)


# --- loops --------------------------------------------------------------------

def test_loop_validation():
    with pytest.raises(LoopNotClosed):
        gh.ParamLoop(np.array([[0, 0], [1, 0], [1, 1]]), closed=True)
    with pytest.raises(ValueError):
        gh.ParamLoop(np.array([[0, 0], [0, 0]]))
    loop = gh.ParamLoop(np.array([[0, 0], [1, 0], [1, 1], [0, 0]]), steps_per_edge=3)
    assert loop.steps_per_edge == (3, 3, 3)
    assert len(loop.refine()) == 10


def test_refine_splits_by_length():
    loop = gh.rectangle_loop(0, 2, 0, 1)
    assert loop.edge_steps(60) == [20, 10, 20, 10]
    assert np.array_equal(loop.refine(60)[-1], loop.points[0])


# --- frames -------------------------------------------------------------------

def test_constant_family_frames_constant():
    H0 = np.diag([0.0, 0.0, 1.0])
    fam = gh.HamiltonianFamily(lambda p: H0, 3, 1)
    frames = gh.smooth_frame_along_path(fam, np.linspace(0, 1, 7)[:, None])
    for f in frames[1:]:
        assert np.allclose(f.right, frames[0].right, atol=1e-12)


def test_u1_path_follows_analytic_dark_span():
    fam = tripod.chart_family("u1", ALPHA, DELTA)
    ref = tripod.dark_frame("u1", ALPHA, DELTA)
    eta = tripod.metric(ALPHA, DELTA).matrix
    path = np.column_stack([np.linspace(0, np.pi / 2, 60), np.zeros(60)])
    frames = gh.smooth_frame_along_path(fam, path)
    for f in frames:
        D = ref(f.point)
        # same projector onto the dark level
        assert np.allclose(f.projector(), D @ (eta @ D).conj().T, atol=1e-10)
    jumps = [np.linalg.norm(b.right - a.right) for a, b in zip(frames[:-1], frames[1:])]
    assert max(jumps) < 0.1


def test_closed_path_frames_differ_by_unitary():
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    path = tripod.chart_rectangle(np.pi / 3).refine(200)
    frames = gh.smooth_frame_along_path(fam, path)
    C = frames[0].left.conj().T @ frames[-1].right
    # eta-orthonormal frames: the restricted metric is the identity
    assert np.linalg.norm(C.conj().T @ C - np.eye(2)) < 1e-9


def test_gap_closure_detected():
    fam = gh.HamiltonianFamily(lambda p: np.diag([0.0, p[0] - 0.5, 2.0]), 3, 1)
    with pytest.raises(GapClosure):
        gh.level_frame(fam, [0.5 + 1e-7], 0.0)
    with pytest.raises(GapClosure):
        gh.smooth_frame_along_path(fam, np.linspace(0, 1, 11)[:, None])


# --- metric connection --------------------------------------------------------

def test_kinetic_constant_metric_vanishes():
    fam = metric_family(lambda p: np.diag([2.0, 3.0]))
    assert np.allclose(gh.kinetic_connection(fam, [0.3], 0), 0)


def test_kinetic_exponential_metric():
    # eta = diag(e^{2l}, 1): d eta = diag(2 e^{2l}, 0), so K = diag(-1, 0)
    fam = metric_family(lambda p: np.diag([np.exp(2 * p[0]), 1.0]))
    for lam in (-0.4, 0.0, 0.7):
        assert np.allclose(gh.kinetic_connection(fam, [lam], 0), np.diag([-1.0, 0.0]), atol=1e-8)


def test_kinetic_tripod_vanishes():
    rng = np.random.default_rng(0)
    for chart in ("u1", "u2"):
        fam = tripod.chart_family(chart, ALPHA, DELTA)
        for p in np.column_stack([rng.uniform(0.1, 3.0, 5), rng.uniform(0, 6.2, 5)]):
            for mu in (0, 1):
                assert np.linalg.norm(gh.kinetic_connection(fam, p, mu)) < 1e-8


def test_kinetic_richardson_flags_rough_metric():
    fam = metric_family(lambda p: np.diag([np.exp(np.sin(3e5 * p[0])), 1.0]))
    with pytest.raises(StepTooLarge):
        gh.kinetic_connection(fam, [0.1], 0)


# --- gauge field --------------------------------------------------------------

@pytest.mark.parametrize("chart", ["u1", "u2"])
def test_tripod_gauge_field_closed_form(chart):
    fam = tripod.chart_family(chart, ALPHA, DELTA)
    ref = tripod.dark_frame(chart, ALPHA, DELTA)
    rng = np.random.default_rng(4)
    for p in np.column_stack([rng.uniform(0.1, 3.0, 6), rng.uniform(0, 6.2, 6)]):
        f = gh.project_reference(gh.level_frame(fam, p), ref(p))
        A = gh.gauge_field(fam, f, reference=ref).components
        if chart == "u1":
            expected = np.zeros((2, 2, 2), dtype=complex)
            expected[1, 1, 1] = -np.sin(p[0] / 2) ** 2
        else:
            expected = np.array([np.zeros((2, 2)), np.cos(p[0]) * SY])
        assert np.max(np.abs(A - expected)) < 1e-6


def test_hermitian_abelian_field_is_berry_connection():
    fam = spin_family()
    h = 1e-6
    for p in ([0.4, 0.3], [1.2, 2.0], [2.0, 5.0]):
        p = np.array(p)
        f = gh.project_reference(gh.level_frame(fam, p, -1.0), spin_state(p)[:, None])
        A = gh.gauge_field(fam, f, reference=lambda q: spin_state(q)[:, None]).components[:, 0, 0]
        phi = spin_state(p)
        for mu in (0, 1):
            e = np.zeros(2)
            e[mu] = h
            d = (spin_state(p + e) - spin_state(p - e)) / (2 * h)
            assert abs(A[mu] - (-np.vdot(phi, d).imag)) < 1e-6
        assert abs(A[1] + np.cos(p[0] / 2) ** 2) < 1e-6


def test_antihermiticity_examples():
    fam = spin_family()
    f = gh.level_frame(fam, [0.7, 0.2], -1.0)
    assert gh.antihermiticity_residual(fam, f) < 1e-10
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    f = gh.level_frame(fam, [0.7, 1.1])
    assert gh.antihermiticity_residual(fam, f) < 1e-8
    _, fam = twisted_family(batched=False)
    f = gh.level_frame(fam, [0.2, -0.3])
    assert gh.antihermiticity_residual(fam, f) < 1e-6


def test_twisted_field_is_hermitian_with_nonzero_kinetic_term():
    _, fam = twisted_family(batched=False)
    p = np.array([0.2, 0.1])
    assert np.linalg.norm(gh.kinetic_connection(fam, p, 0)) > 1e-2
    A = gh.gauge_field(fam, gh.level_frame(fam, p)).components
    for comp in A:
        assert np.linalg.norm(comp - comp.conj().T) < 1e-8


# --- gauge transformations ----------------------------------------------------

def _u2_samples(points):
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    ref = tripod.dark_frame("u2", ALPHA, DELTA)
    out = []
    for p in points:
        f = gh.project_reference(gh.level_frame(fam, p), ref(p))
        out.append(gh.gauge_field(fam, f, reference=ref))
    return fam, ref, out


def test_gauge_transform_identity_and_constant():
    _, _, samples = _u2_samples([np.array([0.5, 0.3])])
    same = gh.gauge_transform(samples, lambda p: np.eye(2))
    assert np.allclose(same[0].components, samples[0].components)
    V = scipy.linalg.expm(0.7j * tripod.SIGMA_X)
    moved = gh.gauge_transform(samples, lambda p: V)
    for mu in range(2):
        expected = np.linalg.inv(V) @ samples[0].components[mu] @ V
        assert np.allclose(moved[0].components[mu], expected, atol=1e-10)


def test_gauge_transform_matches_rotated_frame():
    def U(p):
        return scipy.linalg.expm(1j * p[0] * SY)

    pts = [np.array([0.5, 0.3]), np.array([1.3, 4.0])]
    fam, ref, samples = _u2_samples(pts)
    moved = gh.gauge_transform(samples, U)

    def rotated(p):
        return ref(p) @ U(p)

    for p, s in zip(pts, moved):
        f = gh.project_reference(gh.level_frame(fam, p), rotated(p))
        direct = gh.gauge_field(fam, f, reference=rotated).components
        assert np.max(np.abs(direct - s.components)) < 1e-6


def test_gauge_transform_rejects_non_unitary():
    _, _, samples = _u2_samples([np.array([0.5, 0.3])])
    with pytest.raises(NotPseudoUnitary):
        gh.gauge_transform(samples, lambda p: 2 * np.eye(2))


# --- ordered exponentials -----------------------------------------------------

def _samples_on(loop, field):
    nodes = loop.points
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    return [gh.GaugeFieldSample(m, field(m)) for m in mids]


def test_zero_field_gives_identity():
    loop = gh.rectangle_loop(0, 1, 0, 1)
    res = gh.path_ordered_exponential(_samples_on(loop, lambda p: np.zeros((2, 2, 2))), loop)
    assert np.allclose(res.matrix, np.eye(2))


def test_ordering_later_segment_on_left():
    A = np.array([[0.3, 0.5], [0.5, -0.1]], dtype=complex)
    B = np.array([[0.0, -0.4j], [0.4j, 0.2]], dtype=complex)
    # two unit steps along a 1-D chart, closed by a zero-length edge
    loop = gh.ParamLoop(np.array([[0.0], [1.0], [0.0], [0.0]]))
    samples = [gh.GaugeFieldSample(np.array([0.5]), A[None]),
               gh.GaugeFieldSample(np.array([0.5]), -B[None]),
               gh.GaugeFieldSample(np.array([0.0]), np.zeros((1, 2, 2)))]
    U = gh.path_ordered_exponential(samples, loop).matrix
    expected = scipy.linalg.expm(1j * B) @ scipy.linalg.expm(1j * A)
    assert np.allclose(U, expected)
    assert not np.allclose(U, scipy.linalg.expm(1j * (A + B)))


def test_commuting_field_ignores_order():
    loop = tripod.chart_rectangle(np.pi / 2).refine(400)
    loop = gh.ParamLoop(loop)
    field = lambda p: np.array([np.zeros((2, 2)), np.diag([0.0, -np.sin(p[0] / 2) ** 2])])
    samples = _samples_on(loop, field)
    U = gh.path_ordered_exponential(samples, loop).matrix
    total = sum(np.tensordot(d, s.components, axes=1) for s, d in zip(samples, np.diff(loop.points, axis=0)))
    assert np.allclose(U, scipy.linalg.expm(1j * total), atol=1e-12)
    rev = gh.ordered_exponential([np.tensordot(d, s.components, axes=1)
                                  for s, d in reversed(list(zip(samples, np.diff(loop.points, axis=0))))])
    assert np.allclose(U, rev, atol=1e-12)


def test_open_path_rejected():
    loop = gh.ParamLoop(np.array([[0, 0], [1, 0], [1, 1]]), closed=False)
    with pytest.raises(LoopNotClosed):
        gh.path_ordered_exponential(_samples_on(loop, lambda p: np.zeros((2, 1, 1))), loop)
    with pytest.raises(LoopNotClosed):
        gh.holonomy_of_loop(spin_family(), loop, -1.0)


# --- holonomy -----------------------------------------------------------------

def test_zero_area_loop_is_identity():
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    loop = gh.ParamLoop(np.array([[0.3, 0.2], [1.1, 0.9], [0.3, 0.2]]))
    for gauge in (None, tripod.dark_frame("u2", ALPHA, DELTA)):
        U = gh.holonomy_of_loop(fam, loop, n_steps=400, reference=gauge).matrix
        assert np.linalg.norm(U - np.eye(2)) < 1e-10


@pytest.mark.parametrize("theta0", [np.pi / 6, np.pi / 2])
def test_tripod_rectangle_closed_forms(theta0):
    r1 = tripod.gate_u1(tripod.chart_rectangle(theta0), ALPHA, DELTA)
    assert np.isclose(r1.beta, -2 * np.pi * np.sin(theta0 / 2) ** 2)
    assert r1.discrepancy < 1e-6
    r2 = tripod.gate_u2(tripod.chart_rectangle(theta0), ALPHA, DELTA)
    assert np.isclose(r2.beta, 2 * np.pi * (np.cos(theta0) - 1))
    assert r2.discrepancy < 1e-6


def test_wilson_loop_oracle_non_abelian():
    tf, fam = twisted_family()
    loop = gh.rectangle_loop(0.0, 0.5, 0.0, 0.4)
    res = gh.holonomy_of_loop(fam, loop, 0.0, 1000)
    oracle, F0 = richardson_wilson(tf.hamiltonians, tf.metrics, loop, 2, 2000)
    U = in_frame(res, F0, tf.metrics(loop.points[:1])[0])
    assert np.linalg.norm(U - oracle) < 2e-6
    # the loop is genuinely non-Abelian: U is far from a phase times identity
    assert np.linalg.norm(U - np.trace(U) / 2 * np.eye(2)) > 1e-2
    assert res.pseudo_unitarity_residual < 1e-8


def test_batched_and_pointwise_paths_agree():
    _, fast = twisted_family()
    _, slow = twisted_family(batched=False)
    loop = gh.rectangle_loop(-0.2, 0.3, 0.1, 0.4)
    a = gh.holonomy_of_loop(fast, loop, 0.0, 60)
    b = gh.holonomy_of_loop(slow, loop, 0.0, 60)
    assert np.linalg.norm(a.matrix - b.matrix) < 1e-9


def test_refinement_is_second_order():
    _, fam = twisted_family()
    loop = gh.rectangle_loop(0.0, 0.5, 0.0, 0.4)
    U = [gh.holonomy_of_loop(fam, loop, 0.0, n).matrix for n in (100, 200, 400)]
    d1, d2 = np.linalg.norm(U[0] - U[1]), np.linalg.norm(U[1] - U[2])
    assert d1 / d2 >= 3


def test_aligned_tripod_refinement():
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    loop = tripod.chart_rectangle(np.pi / 6)
    U = [gh.holonomy_of_loop(fam, loop, n_steps=n).matrix for n in (500, 1000, 2000)]
    assert np.linalg.norm(U[0] - U[1]) / np.linalg.norm(U[1] - U[2]) >= 3


def test_reversal_gives_inverse():
    _, fam = twisted_family()
    loop = gh.rectangle_loop(0.0, 0.5, 0.0, 0.4)
    fwd = gh.holonomy_of_loop(fam, loop, 0.0, 1000)
    back = gh.holonomy_of_loop(fam, loop.reversed(), 0.0, 1000)
    # both start at the same base point; bring them to a common frame
    C = back.base_frame.left.conj().T @ fwd.base_frame.right
    back_in_fwd = np.linalg.inv(C) @ back.matrix @ C
    assert np.linalg.norm(back_in_fwd @ fwd.matrix - np.eye(2)) < 1e-8


def test_abelian_reduction_matches_pancharatnam():
    fam = spin_family()
    loop = gh.rectangle_loop(0.3, 1.4, 0.2, 2.5)
    res = gh.holonomy_of_loop(fam, loop, -1.0, 300)
    nodes = loop.refine(4000)
    states = [np.linalg.eigh(fam.at(p))[1][:, 0] for p in nodes[:-1]]
    states.append(states[0])
    oracle = pancharatnam_phase(states)
    assert abs(np.angle(res.matrix[0, 0] * np.exp(-1j * oracle))) < 1e-5
    assert abs(abs(res.matrix[0, 0]) - 1) < 1e-10


def test_abelian_phase_line_integral():
    # analytic gauge: A_phi = -cos^2(theta/2), A_theta = 0
    fam = spin_family()
    loop = gh.rectangle_loop(0.3, 1.4, 0.0, 2 * np.pi)
    ref = lambda p: spin_state(p)[:, None]
    res = gh.holonomy_of_loop(fam, loop, -1.0, 400, reference=ref)
    expected = -2 * np.pi * (np.cos(1.4 / 2) ** 2 - np.cos(0.3 / 2) ** 2)
    dense = gh.ParamLoop(loop.refine(400))
    assert abs(gh.abelian_phase(res.samples, dense) - expected) < 1e-8


def test_gauge_covariance_of_holonomy():
    fam = tripod.chart_family("u2", ALPHA, DELTA)
    ref = tripod.dark_frame("u2", ALPHA, DELTA)
    loop = tripod.chart_rectangle(np.pi / 3, theta_start=0.4)
    res = gh.holonomy_of_loop(fam, loop, n_steps=600, reference=ref)

    def U(p):
        return scipy.linalg.expm(1j * (p[0] + np.sin(p[1])) * SY)

    dense = gh.ParamLoop(loop.refine(600))
    moved = gh.path_ordered_exponential(gh.gauge_transform(res.samples, U), dense).matrix
    base = U(loop.points[0])
    # reference gauge is single valued, so the closure is the identity
    assert np.linalg.norm(res.closure - np.eye(2)) < 1e-10
    assert np.linalg.norm(moved - np.linalg.inv(base) @ res.matrix @ base) < 1e-6


# --- dynamical phase ----------------------------------------------------------

def test_dynamical_phase_examples():
    assert gh.dynamical_phase(lambda t: np.zeros_like(t), 3.0) == 1
    assert np.isclose(gh.dynamical_phase(lambda t: np.ones_like(t), 2 * np.pi), 1)
    assert np.isclose(gh.dynamical_phase(lambda t: t, 1.0), np.exp(-0.5j))
    with pytest.raises(ValueError):
        gh.dynamical_phase(lambda t: t, 0.0)


@given(st.floats(-5, 5), st.floats(0.1, 10))
def test_dynamical_phase_unit_modulus(e, T):
    assert abs(abs(gh.dynamical_phase(lambda t: e * np.sin(t), T)) - 1) < 1e-12


# --- properties ---------------------------------------------------------------

@settings(max_examples=8)
@given(st.floats(0.2, 2.8), st.floats(0.5, 2 * np.pi))
def test_u1_rectangles_match_line_integral(theta0, span):
    rep = tripod.gate_u1(tripod.chart_rectangle(theta0, span), ALPHA, DELTA, n_steps=400)
    assert np.isclose(rep.beta, -span * np.sin(theta0 / 2) ** 2)
    assert rep.discrepancy < 1e-6
    assert rep.pseudo_unitarity_residual < 1e-8


@settings(max_examples=8)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(0.05, 0.4), st.floats(0.05, 0.4))
def test_twisted_holonomy_pseudo_unitary_and_reversible(x0, y0, w, h):
    _, fam = twisted_family()
    loop = gh.rectangle_loop(x0, x0 + w, y0, y0 + h)
    fwd = gh.holonomy_of_loop(fam, loop, 0.0, 200)
    back = gh.holonomy_of_loop(fam, loop.reversed(), 0.0, 200)
    C = back.base_frame.left.conj().T @ fwd.base_frame.right
    assert fwd.pseudo_unitarity_residual < 1e-8
    assert np.linalg.norm(np.linalg.inv(C) @ back.matrix @ C @ fwd.matrix - np.eye(2)) < 1e-8
