"""Four-level gain/loss tripod with a two-fold degenerate dark level.

The Hamiltonian couples an excited state ``|E>`` to three ground states
``|G^c>`` (``c = 0, +, -``) through the non-orthogonal biorthogonal basis

    H = sum_c kappa_c |G^c><E~| + kappa_c^* |E><G~^c|,     |X~> = |X>^*,

with ``Omega = sqrt(Delta^2 - alpha^2)``.  Two charts of the couplings give
the gates ``U1 = diag(1, e^{i beta1})`` and ``U2 = exp(i beta2 sigma_y)`` on
the dark (zero-energy) subspace.

State vectors are written in the basis ``(E, G0, G+, G-)`` through a
coefficient vector ``c``: ``|X> = B c`` and ``|X~> = B^* c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biortho import MetricOperator, pseudo_unitarity_residual, relative_residual, system_from_frames
from .errors import HoloqError, LoopNotClosed, ParamDomain
from .gaugeholo import HamiltonianFamily, ParamLoop, holonomy_of_loop, rectangle_loop

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MIN_RATIO = 1e-6
MAX_RATIO = 0.999


def check_domain(alpha: float, delta: float) -> float:
    """Validate ``0 < alpha^2 < delta^2`` away from the exceptional point; return ``Omega``."""
    if not delta > 0:
        raise ParamDomain(f"delta must be positive, got {delta}")
    ratio = abs(alpha) / delta
    if not MIN_RATIO <= ratio <= MAX_RATIO:
        raise ParamDomain(f"|alpha/delta| = {ratio:.3g} outside [{MIN_RATIO}, {MAX_RATIO}]")
    return float(np.sqrt(delta**2 - alpha**2))


@dataclass(frozen=True)
class TripodParams:
    alpha: float
    delta: float
    kappa0: complex = 0.0
    kappa_plus: complex = 0.0
    kappa_minus: complex = 0.0

    def __post_init__(self):
        check_domain(self.alpha, self.delta)
        if not any(self.couplings):
            raise ParamDomain("at least one coupling must be non-zero")

    @property
    def omega(self) -> float:
        return float(np.sqrt(self.delta**2 - self.alpha**2))

    @property
    def couplings(self) -> tuple[complex, complex, complex]:
        return complex(self.kappa0), complex(self.kappa_plus), complex(self.kappa_minus)

    @property
    def kappa_bar(self) -> float:
        return float(np.sqrt(sum(abs(k) ** 2 for k in self.couplings)))


@dataclass(frozen=True)
class U1Chart:
    theta: float
    phi: float
    kappa: float = 1.0

    def __post_init__(self):
        _check_chart(self)


@dataclass(frozen=True)
class U2Chart:
    theta: float
    phi: float
    kappa: float = 1.0

    def __post_init__(self):
        _check_chart(self)


def _check_chart(chart):
    if not chart.kappa > 0:
        raise ParamDomain("kappa must be positive")
    if not 0.0 <= chart.theta <= np.pi:
        raise ParamDomain(f"theta = {chart.theta} outside [0, pi]")


def u1_chart_couplings(chart: U1Chart) -> tuple[complex, complex, complex]:
    """``(kappa0, kappa+, kappa-) = kappa (cos(t/2), -sin(t/2) e^{-i phi}, 0)``.

    The phase of ``kappa+`` is the one for which ``cos(t/2)|G+> + sin(t/2) e^{i phi}|G0>``
    is a dark state of ``H``.
    """
    k0, kp, km = u1_couplings(np.array([[chart.theta, chart.phi]]), chart.kappa)
    return complex(k0[0]), complex(kp[0]), complex(km[0])


def u2_chart_couplings(chart: U2Chart) -> tuple[complex, complex, complex]:
    """``(kappa0, kappa+, kappa-) = kappa (cos t, sin t sin phi, sin t cos phi)``."""
    k0, kp, km = u2_couplings(np.array([[chart.theta, chart.phi]]), chart.kappa)
    return complex(k0[0]), complex(kp[0]), complex(km[0])


def u1_couplings(points: np.ndarray, kappa: float = 1.0):
    th, ph = np.atleast_2d(points).T
    return (kappa * np.cos(th / 2) + 0j, -kappa * np.sin(th / 2) * np.exp(-1j * ph), np.zeros_like(th, dtype=complex))


def u2_couplings(points: np.ndarray, kappa: float = 1.0):
    th, ph = np.atleast_2d(points).T
    return (kappa * np.cos(th) + 0j, kappa * np.sin(th) * np.sin(ph) + 0j, kappa * np.sin(th) * np.cos(ph) + 0j)


@dataclass(frozen=True)
class TripodFrame:
    """``|E>, |G0>, |G+>, |G->`` as columns of ``basis``; duals are complex conjugates."""

    alpha: float
    delta: float
    basis: np.ndarray  # columns E, G0, G+, G-

    @property
    def E(self):
        return self.basis[:, 0]

    @property
    def G0(self):
        return self.basis[:, 1]

    @property
    def Gplus(self):
        return self.basis[:, 2]

    @property
    def Gminus(self):
        return self.basis[:, 3]

    @property
    def tilde(self) -> np.ndarray:
        return self.basis.conj()

    def states(self, coeffs) -> tuple[np.ndarray, np.ndarray]:
        """Right and left states for coefficient vectors (columns of ``coeffs``)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        return self.basis @ coeffs, self.tilde @ coeffs


def eigenframe(alpha: float, delta: float) -> TripodFrame:
    """The biorthogonal basis with ``N1 = 1/sqrt(2 W (D - W))``, ``N2 = i/sqrt(2 W (D + W))``."""
    W = check_domain(alpha, delta)
    dm = alpha**2 / (delta + W)  # delta - W without cancellation
    n1 = 1 / np.sqrt(2 * W * dm)
    n2 = 1j / np.sqrt(2 * W * (delta + W))
    E = n1 * np.array([-1j * dm, 0, alpha, 0])
    G0 = n1 * np.array([0, -1j * dm, 0, alpha])
    Gm = n2 * np.array([-1j * (W + delta), 0, alpha, 0])
    Gp = n2 * np.array([0, -1j * (W + delta), 0, alpha])
    return TripodFrame(alpha, delta, np.stack([E, G0, Gp, Gm], axis=1))


def _dyads(frame: TripodFrame):
    # |G^c><E~| = G^c E^T and |E><G~^c| = E G^cT, in coupling order (0, +, -)
    E = frame.E
    gs = (frame.G0, frame.Gplus, frame.Gminus)
    return np.array([np.outer(g, E) for g in gs]), np.array([np.outer(E, g) for g in gs])


def hamiltonian_batch(alpha: float, delta: float, k0, kp, km) -> np.ndarray:
    """Stack of dyadic-form Hamiltonians for coupling arrays of equal length."""
    down, up = _dyads(eigenframe(alpha, delta))
    ks = np.stack(np.broadcast_arrays(*(np.atleast_1d(np.asarray(k, dtype=complex)) for k in (k0, kp, km))), axis=1)
    return np.einsum("mc,cij->mij", ks, down) + np.einsum("mc,cij->mij", ks.conj(), up)


def gain_loss_matrices(p: TripodParams, printed: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian ``L`` and ``Gamma`` with ``H = L - i Gamma``.

    ``printed=True`` reproduces the published ``Gamma`` verbatim, whose first
    and third diagonal entries read ``+-|kappa_-|^2``; the dyadic form requires
    ``+-(kappa_- + kappa_-^*)`` there, which is the default.
    """
    a, D, W = p.alpha, p.delta, p.omega
    dm = a * a / (D + W)  # D - W, and a^2 / (D - W) = D + W
    k0, kp, km = p.couplings
    c = np.conj
    L = np.array([
        [0, -dm * c(k0), (D + W) * km + dm * c(km), dm * c(kp)],
        [-dm * k0, 0, (D + W) * kp, 0],
        [(D + W) * c(km) + dm * km, (D + W) * c(kp), 0, (D + W) * c(k0)],
        [dm * kp, 0, (D + W) * k0, 0],
    ]) / (2 * W)
    diag = abs(km) ** 2 if printed else km + c(km)
    G = a / (2 * W) * np.array([
        [diag, c(kp), 0, c(k0)],
        [kp, 0, k0, 0],
        [0, c(k0), -diag, -c(kp)],
        [k0, 0, -kp, 0],
    ])
    return L.astype(complex), G.astype(complex)


def build_hamiltonian(p: TripodParams, self_test: bool = True) -> np.ndarray:
    """Dyadic-form tripod Hamiltonian, cross-checked against ``L - i Gamma``."""
    H = hamiltonian_batch(p.alpha, p.delta, *p.couplings)[0]
    if self_test:
        L, G = gain_loss_matrices(p)
        gap = float(np.max(np.abs(L - 1j * G - H)))
        if gap > 1e-12 * max(1.0, p.kappa_bar):
            raise HoloqError(f"L - i Gamma disagrees with the dyadic Hamiltonian by {gap:.3e}")
    return H


def printed_gamma_discrepancy(p: TripodParams) -> float:
    """Max entry difference between the verbatim ``L - i Gamma`` and the dyadic ``H``."""
    L, G = gain_loss_matrices(p, printed=True)
    return float(np.max(np.abs(L - 1j * G - build_hamiltonian(p, self_test=False))))


def metric(p_or_alpha, delta: float | None = None) -> MetricOperator:
    """``eta = |E~><E~| + sum_c |G~^c><G~^c|``; depends on ``alpha`` and ``delta`` only."""
    if isinstance(p_or_alpha, TripodParams):
        alpha, delta = p_or_alpha.alpha, p_or_alpha.delta
    else:
        alpha = p_or_alpha
    t = eigenframe(alpha, delta).tilde
    return MetricOperator.from_matrix(t @ t.conj().T)


def metric_from_states(left_states: np.ndarray) -> np.ndarray:
    """``sum_n |X~_n><X~_n|`` for left states given as columns (or a stack of them)."""
    return left_states @ np.swapaxes(left_states.conj(), -1, -2)


# --- dark and bright states -------------------------------------------------

def _u1_coeffs(points: np.ndarray) -> np.ndarray:
    """Coefficient matrices ``(m, 4, 4)`` for columns ``D1, D2, B+, B-`` in basis ``(E, G0, G+, G-)``."""
    th, ph = np.atleast_2d(points).T
    s, c, e = np.sin(th / 2), np.cos(th / 2), np.exp(1j * ph)
    m = len(th)
    C = np.zeros((m, 4, 4), dtype=complex)
    C[:, 3, 0] = 1  # D1 = G-
    C[:, 1, 1], C[:, 2, 1] = s * e, c  # D2 = cos G+ + sin e^{i phi} G0
    for col, sign in ((2, -1), (3, 1)):  # B+- = (sin G+ - e^{i phi} cos G0 -+ e^{i phi} E) / sqrt 2
        C[:, 0, col] = sign * e / np.sqrt(2)
        C[:, 1, col] = -e * c / np.sqrt(2)
        C[:, 2, col] = s / np.sqrt(2)
    return C


def _u2_coeffs(points: np.ndarray) -> np.ndarray:
    """Columns ``D1, D2, B+, B-`` for the second chart; ``B+- = (X +- E)/sqrt 2``, ``X = sum kappa_c G^c / kappa``."""
    th, ph = np.atleast_2d(points).T
    m = len(th)
    C = np.zeros((m, 4, 4), dtype=complex)
    C[:, 3, 0], C[:, 2, 0], C[:, 1, 0] = np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)
    C[:, 2, 1], C[:, 3, 1] = np.cos(ph), -np.sin(ph)
    for col, sign in ((2, 1), (3, -1)):
        C[:, 0, col] = sign / np.sqrt(2)
        C[:, 1, col] = np.cos(th) / np.sqrt(2)
        C[:, 2, col] = np.sin(th) * np.sin(ph) / np.sqrt(2)
        C[:, 3, col] = np.sin(th) * np.cos(ph) / np.sqrt(2)
    return C


@dataclass(frozen=True)
class ChartStates:
    """Dark and bright states at one chart point; ``*_tilde`` are their left partners."""

    dark: np.ndarray  # (4, 2)
    dark_tilde: np.ndarray
    bright: np.ndarray  # (4, 2), columns B+ and B-
    bright_tilde: np.ndarray
    kappa: float

    @property
    def right(self) -> np.ndarray:
        return np.concatenate([self.dark, self.bright], axis=1)

    @property
    def left(self) -> np.ndarray:
        return np.concatenate([self.dark_tilde, self.bright_tilde], axis=1)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([0, 0, self.kappa, -self.kappa], dtype=complex)

    def system(self, H=None):
        return system_from_frames(self.eigenvalues, self.right, self.left, matrix=H)


def _chart_states(coeffs, chart, alpha, delta) -> ChartStates:
    R, L = eigenframe(alpha, delta).states(coeffs(np.array([[chart.theta, chart.phi]]))[0])
    return ChartStates(R[:, :2], L[:, :2], R[:, 2:], L[:, 2:], chart.kappa)


def dark_bright_states_u1(chart: U1Chart, alpha: float, delta: float) -> ChartStates:
    """Dark states ``D1 = G-``, ``D2 = cos(t/2) G+ + sin(t/2) e^{i phi} G0`` and bright states."""
    return _chart_states(_u1_coeffs, chart, alpha, delta)


def dark_states_u2(chart: U2Chart, alpha: float, delta: float) -> ChartStates:
    """``D1 = cos t (cos phi G- + sin phi G+) - sin t G0``, ``D2 = cos phi G+ - sin phi G-``."""
    return _chart_states(_u2_coeffs, chart, alpha, delta)


# --- chart families ---------------------------------------------------------

CHARTS = {
    "u1": (u1_couplings, _u1_coeffs, U1Chart),
    "u2": (u2_couplings, _u2_coeffs, U2Chart),
}


def chart_family(chart: str, alpha: float, delta: float, kappa: float = 1.0) -> HamiltonianFamily:
    """Family over ``(theta, phi)``; its metric is rebuilt at every point from
    the chart's left dark and bright states."""
    couplings, coeffs, _ = CHARTS[chart]
    frame = eigenframe(alpha, delta)
    if not kappa > 0:
        raise ParamDomain("kappa must be positive")

    def h_batch(points):
        return hamiltonian_batch(alpha, delta, *couplings(points, kappa))

    def eta_batch(points):
        return metric_from_states(frame.tilde @ coeffs(points))

    return HamiltonianFamily(
        hamiltonian=lambda p: h_batch(np.asarray(p, dtype=float)[None])[0],
        dim=4,
        chart_dim=2,
        metric=lambda p: eta_batch(np.asarray(p, dtype=float)[None])[0],
        hamiltonian_batch=h_batch,
        metric_batch=eta_batch,
        name=f"tripod-{chart}",
    )


def dark_frame(chart: str, alpha: float, delta: float):
    """Callable ``point -> (4, 2)`` analytic dark frame (used as a gauge reference)."""
    _, coeffs, _ = CHARTS[chart]
    basis = eigenframe(alpha, delta).basis

    def frame(point):
        return basis @ coeffs(np.asarray(point)[None])[0][:, :2]

    return frame


def computational_frame(alpha: float, delta: float) -> np.ndarray:
    """``|0> = |G->``, ``|1> = |G+>``."""
    f = eigenframe(alpha, delta)
    return np.stack([f.Gminus, f.Gplus], axis=1)


# --- gates ------------------------------------------------------------------

def _line_integral(loop: ParamLoop, integrand, order: int = 32) -> float:
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1)
    total = 0.0
    for p, q in zip(loop.points[:-1], loop.points[1:]):
        pts = p + s[:, None] * (q - p)
        total += 0.5 * np.dot(w, integrand(pts[:, 0])) * (q[1] - p[1])
    return float(total)


def u1_beta(loop: ParamLoop) -> float:
    """``beta1 = oint (A_phi)^{22} dphi = -oint sin^2(theta/2) dphi``."""
    return _line_integral(loop, lambda th: -np.sin(th / 2) ** 2)


def u2_beta(loop: ParamLoop) -> float:
    """``beta2 = oint cos(theta) dphi``."""
    return _line_integral(loop, np.cos)


def u1_gate(beta1: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * beta1)])


def u2_gate(beta2: float) -> np.ndarray:
    """``exp(i beta sigma_y) = [[cos b, sin b], [-sin b, cos b]]``."""
    c, s = np.cos(beta2), np.sin(beta2)
    return np.array([[c, s], [-s, c]], dtype=complex)


@dataclass(frozen=True)
class TripodGateReport:
    beta: float
    gate: np.ndarray
    numeric_holonomy: np.ndarray
    discrepancy: float
    pseudo_unitarity_residual: float


def to_dark_basis(result, basis_right: np.ndarray, basis_left: np.ndarray) -> np.ndarray:
    """Re-express a holonomy from its base frame in another frame of the same subspace."""
    C = basis_left.conj().T @ result.base_frame.right
    return C @ result.matrix @ np.linalg.inv(C)


GAUGES = ("chart", "aligned")


def _gate(chart: str, loop: ParamLoop, alpha, delta, kappa, n_steps, beta_fn, gate_fn, gauge) -> TripodGateReport:
    if not loop.closed:
        raise LoopNotClosed("gate loops must be closed")
    if gauge not in GAUGES:
        raise ValueError(f"gauge must be one of {GAUGES}")
    beta = beta_fn(loop)
    gate = gate_fn(beta)
    family = chart_family(chart, alpha, delta, kappa)
    # "chart": numeric frames projected on the analytic dark frame, a smooth gauge in
    # which A is constant along rectangle edges; "aligned": polar transport only
    reference = dark_frame(chart, alpha, delta) if gauge == "chart" else None
    result = holonomy_of_loop(family, loop, 0.0, n_steps, reference=reference)
    _, coeffs, _ = CHARTS[chart]
    R, L = eigenframe(alpha, delta).states(coeffs(loop.points[:1])[0][:, :2])
    U = to_dark_basis(result, R, L)
    eta_d = L.conj().T @ R  # identity for the analytic dark frame
    return TripodGateReport(beta, gate, U, float(np.linalg.norm(gate - U)), pseudo_unitarity_residual(U, eta_d))


def gate_u1(loop: ParamLoop, alpha: float, delta: float, kappa: float = 1.0, n_steps: int = 2000,
            gauge: str = "chart") -> TripodGateReport:
    return _gate("u1", loop, alpha, delta, kappa, n_steps, u1_beta, u1_gate, gauge)


def gate_u2(loop: ParamLoop, alpha: float, delta: float, kappa: float = 1.0, n_steps: int = 2000,
            gauge: str = "chart") -> TripodGateReport:
    return _gate("u2", loop, alpha, delta, kappa, n_steps, u2_beta, u2_gate, gauge)


def chart_rectangle(theta0: float, phi_span: float = 2 * np.pi, theta_start: float = 0.0) -> ParamLoop:
    """``(t_s, 0) -> (theta0, 0) -> (theta0, span) -> (t_s, span) -> (t_s, 0)``."""
    return rectangle_loop(theta_start, theta0, 0.0, phi_span)


def commutator_check(beta1: float, beta2: float) -> float:
    """``||[U1, U2] - sin(beta2)(1 - e^{i beta1}) sigma_x||_F``."""
    U1, U2 = u1_gate(beta1), u2_gate(beta2)
    expected = np.sin(beta2) * (1 - np.exp(1j * beta1)) * SIGMA_X
    return float(np.linalg.norm(U1 @ U2 - U2 @ U1 - expected))


def commutator_norm(beta1: float, beta2: float) -> float:
    U1, U2 = u1_gate(beta1), u2_gate(beta2)
    return float(np.linalg.norm(U1 @ U2 - U2 @ U1))


# --- Hermitian counterparts -------------------------------------------------

@dataclass(frozen=True)
class HermitianCounterpart:
    u: np.ndarray
    v: np.ndarray
    h: np.ndarray
    h_tilde: np.ndarray


def hermitian_counterpart(p: TripodParams, W: np.ndarray | None = None) -> HermitianCounterpart:
    """``u = W eta^{1/2}``, ``v = (u^dagger)^{-1}``, ``h = u H v^dagger`` and ``h~ = eta H``."""
    eta = metric(p).matrix
    w, q = np.linalg.eigh(eta)
    u = (q * np.sqrt(w)) @ q.conj().T
    if W is not None:
        u = np.asarray(W, dtype=complex) @ u
    v = np.linalg.inv(u.conj().T)
    H = build_hamiltonian(p)
    return HermitianCounterpart(u, v, u @ H @ v.conj().T, eta @ H)


def hermiticity_residual(m: np.ndarray) -> float:
    return relative_residual(m - m.conj().T, m)
