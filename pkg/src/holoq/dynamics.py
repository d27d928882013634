"""Time evolution under ``i d psi/dt = Lambda psi`` with ``Lambda = H + i K``.

``K(t) = -eta^{-1} eta'(t) / 2`` keeps the eta-norm ``<psi|eta|psi>`` constant
when ``eta`` moves in time; with a constant metric ``Lambda = H``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .biortho import as_matrix, relative_residual
from .errors import DimensionMismatch, ExcessLeakage, NonFiniteState, ParamDomain, StepTooLarge
from .gaugeholo import HamiltonianFamily, ParamLoop

log = logging.getLogger(__name__)

LEAKAGE_WARN = 1e-3
LEAKAGE_ERROR = 1e-1
CHUNK = 8192


@dataclass(frozen=True)
class TimeDependentSystem:
    """``H(t)`` and ``eta(t)`` on ``[0, duration]``.

    The batch evaluators take a 1-D array of times and return ``(m, N, N)``;
    when missing they are emulated with the scalar callables.
    """

    hamiltonian: Callable[[float], np.ndarray]
    metric: Callable[[float], np.ndarray]
    duration: float
    dim: int
    hamiltonian_batch: Callable[[np.ndarray], np.ndarray] | None = None
    metric_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.duration >= 0:
            raise ParamDomain("duration must be non-negative")

    def hamiltonians(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.hamiltonian_batch is not None:
            return np.asarray(self.hamiltonian_batch(ts), dtype=complex)
        return np.stack([as_matrix(self.hamiltonian(t), "H") for t in ts])

    def metrics(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.metric_batch is not None:
            return np.asarray(self.metric_batch(ts), dtype=complex)
        return np.stack([as_matrix(self.metric(t), "metric") for t in ts])

    @classmethod
    def constant(cls, H, eta=None, duration: float = 1.0) -> TimeDependentSystem:
        H = as_matrix(H, "H")
        eta = np.eye(H.shape[0], dtype=complex) if eta is None else as_matrix(eta, "metric")

        def tile(m):
            return lambda ts: np.broadcast_to(m, (len(ts),) + m.shape)

        return cls(lambda t: H, lambda t: eta, duration, H.shape[0], tile(H), tile(eta))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n+1, N) or (n+1, N, k)
    eta_norms: np.ndarray  # (n+1,) or (n+1, k)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _default_step(system: TimeDependentSystem) -> float:
    return 1e-5 * max(1.0, system.duration)


def _metric_rate(system: TimeDependentSystem, ts: np.ndarray, h: float) -> np.ndarray:
    """``d eta / dt``: central differences, second-order one-sided ones at the ends."""
    ts = np.asarray(ts, dtype=float)
    T = system.duration
    out = np.empty((len(ts), system.dim, system.dim), dtype=complex)
    lo, hi = ts - h < 0, ts + h > T
    mid = ~(lo | hi)
    if np.any(mid):
        t = ts[mid]
        out[mid] = (system.metrics(t + h) - system.metrics(t - h)) / (2 * h)
    for mask, sign in ((lo & ~hi, 1.0), (hi & ~lo, -1.0)):
        if np.any(mask):
            t = ts[mask]
            e0, e1, e2 = system.metrics(t), system.metrics(t + sign * h), system.metrics(t + 2 * sign * h)
            out[mask] = sign * (-3 * e0 + 4 * e1 - e2) / (2 * h)
    if np.any(lo & hi):
        raise StepTooLarge(f"difference step {h} does not fit in [0, {T}]")
    return out


def time_generator(system: TimeDependentSystem, t: float, h: float | None = None, *,
                   richardson_tol: float | None = 1e-6) -> np.ndarray:
    """``Lambda(t) = H(t) - i eta^{-1} [eta(t+h) - eta(t-h)] / (4h)``.

    The metric derivative is repeated with ``h/2``; a relative disagreement
    above ``richardson_tol`` raises :class:`StepTooLarge`.
    """
    h = _default_step(system) if h is None else float(h)
    if h <= 0:
        raise ValueError("h must be positive")
    if t - h < 0 or t + h > system.duration:
        raise ParamDomain(f"t +- h must lie in [0, {system.duration}]")
    H = system.hamiltonians([t])[0]
    eta = system.metrics([t])[0]
    d_eta = _metric_rate(system, [t], h)[0]
    if richardson_tol is not None:
        d_half = _metric_rate(system, [t], h / 2)[0]
        scale = np.linalg.norm(d_eta) + np.linalg.norm(eta) / max(system.duration, 1.0)
        if np.linalg.norm(d_eta - d_half) > richardson_tol * scale:
            raise StepTooLarge(f"metric derivative unstable at t={t}")
    return H - 0.5j * np.linalg.solve(eta, d_eta)


def generators(system: TimeDependentSystem, ts, h: float | None = None, kind: str = "lambda") -> np.ndarray:
    """Stack of ``Lambda(t)`` (or of ``H(t)`` for ``kind="hamiltonian"``)."""
    ts = np.asarray(ts, dtype=float)
    H = system.hamiltonians(ts)
    if kind == "hamiltonian":
        return H
    if kind != "lambda":
        raise ValueError("kind must be 'lambda' or 'hamiltonian'")
    h = _default_step(system) if h is None else float(h)
    return H - 0.5j * np.linalg.solve(system.metrics(ts), _metric_rate(system, ts, h))


def _rk4_propagators(a1, a2, a3, dt):
    # one classical RK4 step of the linear ODE psi' = A(t) psi as a matrix
    eye = np.eye(a1.shape[-1])
    m2 = a2 @ (eye + 0.5 * dt * a1)
    m3 = a2 @ (eye + 0.5 * dt * m2)
    m4 = a3 @ (eye + dt * m3)
    return eye + dt / 6 * (a1 + 2 * m2 + 2 * m3 + m4)


def evolve(system: TimeDependentSystem, psi0, n_steps: int, *, generator: str = "lambda",
           h: float | None = None) -> Trajectory:
    """Fixed-step RK4 integration, recording every step.

    ``psi0`` is a vector ``(N,)`` or a block of ``k`` columns ``(N, k)``.
    ``generator="hamiltonian"`` drops the metric term (control runs).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape[0] != system.dim or psi.ndim not in (1, 2):
        raise DimensionMismatch(f"initial state has shape {psi.shape}, system dimension {system.dim}")
    T = system.duration
    dt = T / n_steps
    times = np.linspace(0.0, T, n_steps + 1)
    states = np.empty((n_steps + 1,) + psi.shape, dtype=complex)
    states[0] = psi
    vec = psi.ndim == 1
    cur = psi[:, None] if vec else psi
    for start in range(0, n_steps, CHUNK):
        stop = min(start + CHUNK, n_steps)
        grid = np.linspace(times[start], times[stop], 2 * (stop - start) + 1)
        A = -1j * generators(system, grid, h, generator)
        M = _rk4_propagators(A[0:-1:2], A[1::2], A[2::2], dt)
        block = np.empty((stop - start,) + cur.shape, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported below
            for j, m in enumerate(M):
                cur = m @ cur
                block[j] = cur
        if not np.all(np.isfinite(block)):
            raise NonFiniteState(f"state blew up before t={times[stop]:.6g}")
        states[start + 1: stop + 1] = block[..., 0] if vec else block
    return Trajectory(times, states, eta_norms(system, times, states))


def eta_norms(system: TimeDependentSystem, times, states) -> np.ndarray:
    out = []
    for start in range(0, len(times), 4 * CHUNK):
        sl = slice(start, start + 4 * CHUNK)
        eta = system.metrics(times[sl])
        s = states[sl]
        if s.ndim == 2:
            out.append(np.einsum("ti,tij,tj->t", s.conj(), eta, s).real)
        else:
            out.append(np.einsum("tik,tij,tjk->tk", s.conj(), eta, s).real)
    return np.concatenate(out)


def norm_conservation_drift(traj: Trajectory) -> float:
    """``max_k |n_k - n_0| / |n_0|`` of the eta-norms (worst column for blocks)."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    n = traj.eta_norms
    return float(np.max(np.abs(n - n[0]) / np.abs(n[0])))


def metric_ode_residual(system: TimeDependentSystem, t: float, h: float | None = None) -> float:
    """``|| i eta' - (Lambda^dagger eta - eta Lambda) ||_F / ||eta||_F`` at ``t``."""
    h = _default_step(system) if h is None else float(h)
    if t - h < 0 or t + h > system.duration:
        raise ParamDomain(f"t +- h must lie in [0, {system.duration}]")
    eta = system.metrics([t])[0]
    lam = time_generator(system, t, h, richardson_tol=None)
    d_eta = (system.metrics([t + h])[0] - system.metrics([t - h])[0]) / (2 * h)
    return relative_residual(1j * d_eta - (lam.conj().T @ eta - eta @ lam), eta)


def leakage(psi, right, left, eta) -> np.ndarray:
    """Relative eta-weight of ``psi`` outside ``span(right)`` (per column)."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi[:, None] if psi.ndim == 1 else psi
    out = psi - right @ (left.conj().T @ psi)
    num = np.einsum("ik,ij,jk->k", out.conj(), eta, out).real
    den = np.einsum("ik,ij,jk->k", psi.conj(), eta, psi).real
    return num / den


def adiabatic_gate_extract(traj: Trajectory, dark_right, dark_left, eta, *, warn: float = LEAKAGE_WARN,
                           error: float = LEAKAGE_ERROR) -> np.ndarray:
    """Map of dark coefficients ``c(T) = G c(0)`` with ``c_a = <D~^a|psi>``.

    ``traj`` must hold a block of ``n0`` columns started inside the dark span.
    """
    R = np.asarray(dark_right, dtype=complex)
    L = np.asarray(dark_left, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    psi0, psiT = traj.states[0], traj.final
    if psi0.ndim == 1:
        psi0, psiT = psi0[:, None], psiT[:, None]
    if psi0.shape[1] != R.shape[1]:
        raise DimensionMismatch(f"need {R.shape[1]} initial columns, got {psi0.shape[1]}")
    if np.max(leakage(psi0, R, L, eta)) > 1e-6:
        raise ParamDomain("initial state is not inside the dark subspace")
    leak = float(np.max(leakage(psiT, R, L, eta)))
    if leak > error:
        raise ExcessLeakage(f"final excited population {leak:.3e} exceeds {error:g}")
    if leak > warn:
        log.warning("evolution not fully adiabatic: leakage %.3e", leak)
    c0 = L.conj().T @ psi0
    cT = L.conj().T @ psiT
    return cT @ np.linalg.inv(c0)


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3 - 2 * s)


@dataclass(frozen=True)
class LoopSchedule:
    """``gamma(t)`` through the loop vertices; edge times proportional to chart
    length, each edge traversed with a smoothstep ramp."""

    loop: ParamLoop
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ParamDomain("duration must be positive")

    @property
    def edge_times(self) -> np.ndarray:
        lengths = self.loop.edge_lengths
        return np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum() * self.duration

    def points(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        edges = self.edge_times
        k = np.clip(np.searchsorted(edges, ts, side="right") - 1, 0, len(edges) - 2)
        span = edges[k + 1] - edges[k]
        s = smoothstep(np.where(span > 0, (ts - edges[k]) / np.where(span > 0, span, 1.0), 1.0))
        pts = self.loop.points
        return pts[k] + s[:, None] * (pts[k + 1] - pts[k])


def loop_system(family: HamiltonianFamily, loop: ParamLoop, duration: float) -> TimeDependentSystem:
    """Drive ``family`` once around ``loop`` in time ``duration``."""
    sched = LoopSchedule(loop, duration)

    def hb(ts):
        return family.hamiltonians(sched.points(ts))

    def eb(ts):
        return family.metrics(sched.points(ts))

    return TimeDependentSystem(lambda t: hb([t])[0], lambda t: eb([t])[0], duration, family.dim, hb, eb)


def synthetic_metric_system(h, X, duration: float = 1.0) -> TimeDependentSystem:
    """``H(t) = S h S^{-1}`` with ``S(t) = exp(t X)``, pseudo-Hermitian under
    ``eta(t) = (S S^dagger)^{-1}`` for Hermitian ``h``.  Used to show that
    evolving with ``H`` alone breaks eta-norm conservation."""
    h = as_matrix(h, "h")
    X = as_matrix(X, "X")
    if h.shape != X.shape:
        raise DimensionMismatch("h and X must have the same shape")
    w, V = np.linalg.eig(X)
    Vinv = np.linalg.inv(V)

    def S(ts, sign=1.0):
        return (V * np.exp(sign * np.multiply.outer(ts, w))[:, None, :]) @ Vinv

    def hb(ts):
        ts = np.asarray(ts, dtype=float)
        return S(ts) @ h @ S(ts, -1.0)

    def eb(ts):
        ts = np.asarray(ts, dtype=float)
        Si = S(ts, -1.0)
        return np.conj(np.swapaxes(Si, -1, -2)) @ Si

    return TimeDependentSystem(lambda t: hb([t])[0], lambda t: eb([t])[0], duration, h.shape[0], hb, eb)
