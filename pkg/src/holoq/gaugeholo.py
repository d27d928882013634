"""Non-Abelian gauge field and holonomies of a degenerate level.

For a family ``H(lambda)`` with an ``n0``-fold degenerate level, frames
``F`` (right, ``N x n0``) and ``F~`` (left) are tracked along a path and the
connection components

    (A_mu)[b, a] = i <phi~^b| (d_mu - K_mu) |phi^a>,    K_mu = -eta^{-1} d_mu eta / 2

are obtained by central differences.  The holonomy of a closed loop is the
midpoint-rule path-ordered product, later segments acting on the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .biortho import BiorthoSystem, MetricOperator, as_matrix, biorthogonal_eig, metric_from_left, pseudo_unitarity_residual
from .errors import DimensionMismatch, GapClosure, LoopNotClosed, NotPseudoUnitary, PairingAmbiguity, StepTooLarge

DEFAULT_STEP = 1e-5
DEFAULT_SEGMENTS = 2000


@dataclass(frozen=True)
class ParamLoop:
    """Polyline in a chart; ``closed`` loops repeat their first point at the end."""

    points: np.ndarray
    closed: bool = True
    steps_per_edge: tuple[int, ...] | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 3:
            raise ValueError("a loop needs at least 3 points")
        if self.closed and not np.array_equal(pts[0], pts[-1]):
            raise LoopNotClosed("closed loop must end on its first point")
        steps = self.steps_per_edge
        if steps is not None:
            # one count for every edge, or one per edge
            steps = (int(steps),) * (pts.shape[0] - 1) if np.isscalar(steps) else tuple(int(s) for s in steps)
            if len(steps) != pts.shape[0] - 1 or min(steps) < 1:
                raise ValueError("steps_per_edge needs one positive entry per edge")
            object.__setattr__(self, "steps_per_edge", steps)
        object.__setattr__(self, "points", pts)

    @property
    def chart_dim(self) -> int:
        return self.points.shape[1]

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def reversed(self) -> ParamLoop:
        steps = None if self.steps_per_edge is None else tuple(reversed(self.steps_per_edge))
        return ParamLoop(self.points[::-1].copy(), self.closed, steps)

    def edge_steps(self, n_steps: int) -> list[int]:
        """Segments per edge: ``steps_per_edge`` if set, else ``n_steps`` split by length."""
        if self.steps_per_edge is not None:
            return list(self.steps_per_edge)
        lengths = self.edge_lengths
        total = lengths.sum()
        if total == 0:
            return [1] * len(lengths)
        raw = n_steps * lengths / total
        counts = np.floor(raw).astype(int)
        # largest remainder, ties broken by edge order
        for k in np.argsort(-(raw - counts), kind="stable")[: n_steps - counts.sum()]:
            counts[k] += 1
        counts[(counts == 0) & (lengths > 0)] = 1
        return counts.tolist()

    def refine(self, n_steps: int = DEFAULT_SEGMENTS) -> np.ndarray:
        """Dense vertex list (``M + 1`` points) with ``M ~ n_steps`` segments."""
        out = [self.points[:1]]
        for p, q, m in zip(self.points[:-1], self.points[1:], self.edge_steps(n_steps)):
            if m == 0:
                continue
            s = np.arange(1, m)[:, None] / m
            out.append(p + s * (q - p))
            out.append(q[None])  # exact vertex, so closed loops stay closed
        return np.concatenate(out)


def rectangle_loop(x0: float, x1: float, y0: float, y1: float, steps_per_edge=None) -> ParamLoop:
    """Counter-clockwise rectangle ``(x0,y0) -> (x1,y0) -> (x1,y1) -> (x0,y1) -> (x0,y0)``."""
    pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    return ParamLoop(np.array(pts, dtype=float), True, steps_per_edge)


@dataclass(frozen=True)
class HamiltonianFamily:
    """Parametrized Hamiltonian ``H(lambda)`` with an optional metric evaluator.

    Without ``metric`` the metric at a point is ``metric_from_left`` of the
    point's biorthogonal eigensystem.  The optional batch evaluators take an
    ``(m, d)`` array of points and return ``(m, N, N)`` stacks.
    """

    hamiltonian: Callable[[np.ndarray], np.ndarray]
    dim: int
    chart_dim: int
    metric: Callable[[np.ndarray], np.ndarray] | None = None
    hamiltonian_batch: Callable[[np.ndarray], np.ndarray] | None = None
    metric_batch: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def at(self, point) -> np.ndarray:
        H = as_matrix(self.hamiltonian(np.asarray(point, dtype=float)), "H")
        if H.shape[0] != self.dim:
            raise DimensionMismatch(f"H has size {H.shape[0]}, family declares {self.dim}")
        return H

    def metric_at(self, point, system: BiorthoSystem | None = None) -> MetricOperator:
        if self.metric is not None:
            return MetricOperator.from_matrix(self.metric(np.asarray(point, dtype=float)))
        return metric_from_left(system if system is not None else biorthogonal_eig(self.at(point)))

    def hamiltonians(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.hamiltonian_batch is not None:
            return np.asarray(self.hamiltonian_batch(points), dtype=complex)
        return np.stack([self.at(p) for p in points])

    def metrics(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.metric_batch is not None:
            return np.asarray(self.metric_batch(points), dtype=complex)
        return np.stack([self.metric_at(p).matrix for p in points])


@dataclass(frozen=True)
class LevelFrame:
    """Biorthonormal frame of one degenerate level at one chart point."""

    point: np.ndarray
    energy: complex
    right: np.ndarray
    left: np.ndarray

    @property
    def size(self) -> int:
        return self.right.shape[1]

    def projector(self) -> np.ndarray:
        return self.right @ self.left.conj().T

    def transform(self, M) -> LevelFrame:
        """Frame ``F M`` with dual ``F~ M^{-dagger}``."""
        M = np.asarray(M, dtype=complex)
        return replace(self, right=self.right @ M, left=self.left @ np.linalg.inv(M).conj().T)


@dataclass(frozen=True)
class GaugeFieldSample:
    point: np.ndarray
    components: np.ndarray  # (d, n0, n0), components[mu][b, a]

    @property
    def chart_dim(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class HolonomyResult:
    matrix: np.ndarray
    steps: int
    pseudo_unitarity_residual: float
    segment_log: np.ndarray = field(repr=False)  # generators sum_mu A_mu dlambda^mu per segment
    base_frame: LevelFrame | None = field(default=None, repr=False)
    closure: np.ndarray | None = field(default=None, repr=False)
    samples: list | None = field(default=None, repr=False)  # midpoint GaugeFieldSamples


def _normalize_to_metric(right: np.ndarray, eta: MetricOperator) -> tuple[np.ndarray, np.ndarray]:
    # Loewdin: F <- F (F^dagger eta F)^{-1/2}, F~ = eta F
    gram = right.conj().T @ eta.matrix @ right
    w, q = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    right = right @ (q / np.sqrt(w)) @ q.conj().T
    return right, eta.matrix @ right


def _block_score(prev: LevelFrame, right: np.ndarray, left: np.ndarray) -> float:
    # basis-independent overlap of the previous level with a candidate block
    m = (prev.left.conj().T @ right) @ (left.conj().T @ prev.right)
    return float(np.linalg.norm(m) / np.sqrt(prev.size))


def level_frame(family: HamiltonianFamily, point, level=0.0, *, previous: LevelFrame | None = None,
                gap_tol: float = 1e-6, pairing_tol: float = 1e-2) -> LevelFrame:
    """Frame of the selected level at ``point`` (solver gauge, not yet aligned).

    With ``previous`` the block is chosen by maximal overlap with the previous
    frame instead of by eigenvalue; the block size must not change.
    """
    point = np.asarray(point, dtype=float)
    system = biorthogonal_eig(family.at(point))
    if previous is None:
        block = system.block(level)
    else:
        candidates = [b for b in system.blocks if b.size == previous.size]
        if not candidates:
            raise GapClosure(f"no block of size {previous.size} at {point}: degeneracy changed")
        scores = [_block_score(previous, *system.frames(b)) for b in candidates]
        order = np.argsort(scores)[::-1]
        if scores[order[0]] < 0.5:
            raise GapClosure(f"level lost at {point}: best overlap {scores[order[0]]:.3g} with the previous frame")
        if len(order) > 1 and scores[order[0]] - scores[order[1]] < pairing_tol:
            raise PairingAmbiguity(f"two blocks overlap equally with the previous frame at {point}")
        block = candidates[order[0]]
    others = np.delete(system.eigenvalues, np.arange(block.start, block.stop))
    if others.size and np.min(np.abs(others - block.eigenvalue)) <= gap_tol:
        raise GapClosure(f"level {block.eigenvalue:.3g} touches the spectrum at {point}")
    right, left = system.frames(block)
    if family.metric is not None:
        right, left = _normalize_to_metric(right, family.metric_at(point))
    return LevelFrame(point, block.eigenvalue, right, left)


def align_frame(frame: LevelFrame, previous: LevelFrame) -> LevelFrame:
    """Rotate ``frame`` by a unitary so its overlap with ``previous`` is Hermitian positive.

    For a single state this fixes ``<phi~_prev|phi_new>`` real and positive.
    The overlap uses the mean of both metrics, which keeps the alignment
    symmetric between the two points when the metric varies.
    """
    overlap = 0.5 * (previous.left.conj().T @ frame.right + previous.right.conj().T @ frame.left)
    u, _ = scipy.linalg.polar(overlap, side="left")
    return frame.transform(u.conj().T)


def project_reference(frame: LevelFrame, reference) -> LevelFrame:
    """Gauge fixed by a reference frame.

    ``F' = F U`` with ``U`` the unitary polar factor of ``F~^dagger R``, i.e.
    the normalized projection of ``R`` on the level.
    """
    reference = np.asarray(reference, dtype=complex)
    c = frame.left.conj().T @ reference
    if np.linalg.svd(c, compute_uv=False)[-1] < 1e-8:
        raise PairingAmbiguity(f"reference frame is (nearly) orthogonal to the level at {frame.point}")
    u, _ = scipy.linalg.polar(c, side="right")
    return frame.transform(u)


def _gauge(frame: LevelFrame, anchor: LevelFrame, reference) -> LevelFrame:
    if reference is not None:
        return project_reference(frame, reference(frame.point))
    return align_frame(frame, anchor)


def smooth_frame_along_path(family: HamiltonianFamily, path, level=0.0, tol: float = 1e-6,
                            reference: Callable[[np.ndarray], np.ndarray] | None = None) -> list[LevelFrame]:
    """Continuous frames of one level along ``path``.

    Each frame is matched to its predecessor by overlap and aligned with
    :func:`align_frame`; with ``reference`` every frame is instead projected on
    ``reference(point)`` (a fixed, path-independent gauge).
    """
    frames: list[LevelFrame] = []
    for p in np.atleast_2d(np.asarray(path, dtype=float)):
        if not frames:
            f = level_frame(family, p, level, gap_tol=tol)
            frames.append(project_reference(f, reference(p)) if reference is not None else f)
            continue
        prev = frames[-1]
        frames.append(_gauge(level_frame(family, p, previous=prev, gap_tol=tol), prev, reference))
    return frames


def _metric_derivative(family: HamiltonianFamily, point: np.ndarray, mu: int, h: float, inverse: bool = False):
    e = np.zeros_like(point)
    e[mu] = h
    plus, minus = family.metric_at(point + e), family.metric_at(point - e)
    if inverse:
        return (plus.inverse - minus.inverse) / (2 * h)
    return (plus.matrix - minus.matrix) / (2 * h)


def kinetic_connection(family: HamiltonianFamily, point, mu: int, h: float = DEFAULT_STEP, *,
                       richardson_tol: float = 1e-6) -> np.ndarray:
    """Metric connection ``K_mu = -eta^{-1} d_mu eta / 2`` by central differences.

    The derivative is repeated with ``h / 2``; a difference above
    ``richardson_tol * ||eta||`` raises :class:`StepTooLarge`.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    point = np.asarray(point, dtype=float)
    eta = family.metric_at(point)
    d_eta = _metric_derivative(family, point, mu, h)
    if richardson_tol is not None:
        d_half = _metric_derivative(family, point, mu, h / 2)
        gap = np.linalg.norm(d_eta - d_half)
        if gap > richardson_tol * np.linalg.norm(eta.matrix):
            raise StepTooLarge(f"d eta/d lambda^{mu} unstable at {point}: Richardson gap {gap:.3e}")
    return -0.5 * eta.inverse @ d_eta


def _stencil(family, frame, mu, h, reference, gap_tol):
    e = np.zeros_like(frame.point)
    e[mu] = h
    out = []
    for p in (frame.point + e, frame.point - e):
        out.append(_gauge(level_frame(family, p, previous=frame, gap_tol=gap_tol), frame, reference))
    return out


def gauge_field_components(family: HamiltonianFamily, frame: LevelFrame, mu: int, h: float = DEFAULT_STEP, *,
                           reference=None, gap_tol: float = 1e-6, kinetic: np.ndarray | None = None) -> np.ndarray:
    """``(A_mu)[b, a] = i <phi~^b|(d_mu - K_mu)|phi^a>`` in the gauge of ``frame``.

    Neighbouring frames at ``lambda +- h e_mu`` are aligned to ``frame`` (or
    projected on ``reference``) before differencing.
    """
    plus, minus = _stencil(family, frame, mu, h, reference, gap_tol)
    d_right = (plus.right - minus.right) / (2 * h)
    K = kinetic_connection(family, frame.point, mu, h) if kinetic is None else kinetic
    return 1j * frame.left.conj().T @ (d_right - K @ frame.right)


def gauge_field(family: HamiltonianFamily, frame: LevelFrame, h: float = DEFAULT_STEP, *, reference=None,
                gap_tol: float = 1e-6) -> GaugeFieldSample:
    comps = [gauge_field_components(family, frame, mu, h, reference=reference, gap_tol=gap_tol)
             for mu in range(family.chart_dim)]
    return GaugeFieldSample(frame.point, np.array(comps))


def antihermiticity_residual(family: HamiltonianFamily, frame: LevelFrame, h: float = DEFAULT_STEP, *,
                             reference=None, gap_tol: float = 1e-6) -> float:
    """``max |[i A^{ba}]^* + i A~^{ab}|`` over components and indices.

    ``A~`` swaps the roles of right and left frames; the metric of the left
    vectors is ``eta^{-1}``, so its connection is ``-eta d(eta^{-1}) / 2``.
    """
    eta = family.metric_at(frame.point)
    worst = 0.0
    for mu in range(family.chart_dim):
        plus, minus = _stencil(family, frame, mu, h, reference, gap_tol)
        K = -0.5 * eta.inverse @ _metric_derivative(family, frame.point, mu, h)
        K_swap = -0.5 * eta.matrix @ _metric_derivative(family, frame.point, mu, h, inverse=True)
        d_right = (plus.right - minus.right) / (2 * h)
        d_left = (plus.left - minus.left) / (2 * h)
        A = 1j * frame.left.conj().T @ (d_right - K @ frame.right)
        A_swap = 1j * frame.right.conj().T @ (d_left - K_swap @ frame.left)
        worst = max(worst, float(np.max(np.abs((1j * A).conj().T + 1j * A_swap))))
    return worst


def gauge_transform(samples: Sequence[GaugeFieldSample], transform: Callable[[np.ndarray], np.ndarray],
                    h: float = DEFAULT_STEP, *, restricted_metric=None, tol: float = 1e-8) -> list[GaugeFieldSample]:
    """``A_mu -> U^{-1} A_mu U + U^{-1} i d_mu U`` at every sample.

    ``transform(point)`` must be pseudo-unitary under ``restricted_metric``
    (a matrix, a callable of the point, or ``None`` for the identity).
    """
    out = []
    for s in samples:
        U = np.asarray(transform(s.point), dtype=complex)
        if callable(restricted_metric):
            eta = restricted_metric(s.point)
        else:
            eta = np.eye(U.shape[0]) if restricted_metric is None else restricted_metric
        r = pseudo_unitarity_residual(U, eta)
        if r > tol:
            raise NotPseudoUnitary(f"transformation at {s.point} has residual {r:.3e}")
        U_inv = np.linalg.inv(U)
        comps = []
        for mu in range(s.chart_dim):
            e = np.zeros_like(s.point)
            e[mu] = h
            dU = (np.asarray(transform(s.point + e)) - np.asarray(transform(s.point - e))) / (2 * h)
            comps.append(U_inv @ s.components[mu] @ U + 1j * U_inv @ dU)
        out.append(GaugeFieldSample(s.point, np.array(comps)))
    return out


def ordered_exponential(generators: Sequence[np.ndarray]) -> np.ndarray:
    """``exp(i G_M) ... exp(i G_2) exp(i G_1)``: later generators act on the left."""
    generators = list(generators)
    n = generators[0].shape[0]
    U = np.eye(n, dtype=complex)
    for g in generators:
        U = scipy.linalg.expm(1j * g) @ U
    return U


def path_ordered_exponential(samples: Sequence[GaugeFieldSample], path: ParamLoop, *,
                             restricted_metric=None) -> HolonomyResult:
    """Midpoint-rule ``P exp(i oint A)``; ``samples[k]`` belongs to segment ``k`` of ``path``."""
    if not path.closed:
        raise LoopNotClosed("path-ordered holonomy needs a closed loop")
    steps = np.diff(path.points, axis=0)
    if len(samples) != len(steps):
        raise DimensionMismatch(f"{len(samples)} samples for {len(steps)} segments")
    gens = np.array([np.tensordot(d, s.components, axes=1) for s, d in zip(samples, steps)])
    U = ordered_exponential(gens)
    eta = np.eye(U.shape[0]) if restricted_metric is None else restricted_metric
    return HolonomyResult(U, len(gens), pseudo_unitarity_residual(U, eta), gens)


def _polar_unitary(c: np.ndarray) -> np.ndarray:
    # unitary polar factor of a stack of square matrices (same for either side)
    w, _, vh = np.linalg.svd(c)
    return w @ vh


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _batched_level_frames(family: HamiltonianFamily, points: np.ndarray, energy: complex, n0: int,
                          gap_tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw eta-normalized frames ``(m, N, n0)`` of the level tracked from ``energy``."""
    H = family.hamiltonians(points)
    eta = family.metrics(points)
    w, vr = np.linalg.eig(H)
    m, N = w.shape
    if n0 >= N:
        raise GapClosure("the level fills the whole space")
    idx = np.empty((m, n0), dtype=int)
    for k in range(m):
        # follow the level continuously in case its energy drifts
        order = np.argsort(np.abs(w[k] - energy), kind="stable")
        if abs(w[k, order[n0]] - energy) <= gap_tol or \
                np.min(np.abs(w[k, order[n0:]] - w[k, order[:n0], None])) <= gap_tol:
            raise GapClosure(f"level {energy:.3g} touches the spectrum at {points[k]}")
        idx[k] = order[:n0]
        energy = w[k, order[:n0]].mean()
    right = np.take_along_axis(vr, idx[:, None, :], axis=2)
    energies = np.take_along_axis(w, idx, axis=1).mean(axis=1)
    if n0 > 1:
        # solver vectors of a degenerate non-normal block can be nearly parallel; the
        # null space of H - E is an orthonormal basis of the same span
        _, _, vh = np.linalg.svd(H - energies[:, None, None] * np.eye(N))
        right = _dagger(vh[:, -n0:])
    gram = _dagger(right) @ eta @ right
    lam, q = np.linalg.eigh(0.5 * (gram + _dagger(gram)))
    right = right @ (q / np.sqrt(lam)[:, None, :]) @ _dagger(q)
    return right, eta @ right, eta


def _overlap(anchor_right, anchor_left, right, left):
    # F_a^dagger eta_bar F with eta_bar the mean of both metrics; symmetric in the
    # two frames, so the alignment is reversible and transport stays second order
    return 0.5 * (_dagger(anchor_left) @ right + _dagger(anchor_right) @ left)


def _batched_gauge(right, left, anchors, reference_frames):
    if reference_frames is not None:
        u = _polar_unitary(_dagger(left) @ reference_frames)
        return right @ u, left @ u
    u = _dagger(_polar_unitary(_overlap(*anchors, right, left)))
    return right @ u, left @ u


def _holonomy_batched(family: HamiltonianFamily, seq: np.ndarray, base: LevelFrame, h: float, tol: float,
                      reference, richardson_tol: float = 1e-6):
    n0, d = base.size, family.chart_dim
    mids = seq[1::2]
    offsets = h * np.eye(d)
    stencil_pts = np.concatenate([mids[:, None, :] + offsets, mids[:, None, :] - offsets], axis=1)
    stencil_pts = stencil_pts.reshape(-1, d)
    all_pts = np.concatenate([seq, stencil_pts])
    right, left, eta = _batched_level_frames(family, all_pts, base.energy, n0, tol)
    ref = None if reference is None else np.array([reference(p) for p in all_pts], dtype=complex)
    n = len(seq)
    R, Lf = right[:n], left[:n]
    if ref is not None:
        R, Lf = _batched_gauge(R, Lf, None, ref[:n])
    else:
        # polar alignment to the predecessor composes into a running product
        step = _overlap(R[:-1], Lf[:-1], R[1:], Lf[1:])
        if np.min(np.linalg.svd(step, compute_uv=False)) < 1e-8:
            raise PairingAmbiguity("consecutive frames lost overlap; refine the path")
        start = _dagger(Lf[0]) @ base.right
        x = np.empty((n, n0, n0), dtype=complex)
        x[0] = start
        u = _dagger(_polar_unitary(step))
        for k in range(1, n):
            x[k] = u[k - 1] @ x[k - 1]
        R, Lf = R @ x, Lf @ x
    m = len(mids)
    G, Gl = R[1::2], Lf[1::2]
    sr = right[n:].reshape(m, 2 * d, -1, n0)
    sl = left[n:].reshape(m, 2 * d, -1, n0)
    sref = None if ref is None else ref[n:].reshape(m, 2 * d, -1, n0)
    anchors = (np.repeat(G[:, None], 2 * d, axis=1), np.repeat(Gl[:, None], 2 * d, axis=1))
    sr, _ = _batched_gauge(sr, sl, anchors, sref)
    d_right = (sr[:, :d] - sr[:, d:]) / (2 * h)
    eta_s = eta[n:].reshape(m, 2 * d, *eta.shape[1:])
    d_eta = (eta_s[:, :d] - eta_s[:, d:]) / (2 * h)
    if richardson_tol is not None:
        half = np.concatenate([mids[:, None, :] + offsets / 2, mids[:, None, :] - offsets / 2], axis=1)
        eta_h = family.metrics(half.reshape(-1, d)).reshape(eta_s.shape)
        gap = np.linalg.norm(d_eta - (eta_h[:, :d] - eta_h[:, d:]) / h, axis=(-2, -1))
        scale = np.linalg.norm(eta[1:n:2], axis=(-2, -1))
        if np.any(gap > richardson_tol * scale[:, None]):
            raise StepTooLarge("d eta/d lambda unstable along the loop: Richardson gap too large")
    K = -0.5 * np.linalg.inv(eta[1:n:2])[:, None] @ d_eta
    comps = 1j * _dagger(Gl)[:, None] @ (d_right - K @ G[:, None])
    samples = [GaugeFieldSample(p, c) for p, c in zip(mids, comps)]
    base_frame = replace(base, right=R[0], left=Lf[0])
    end = LevelFrame(seq[-1], base.energy, R[-1], Lf[-1])
    return samples, base_frame, end


def holonomy_of_loop(family: HamiltonianFamily, loop: ParamLoop, level=0.0, n_steps: int = DEFAULT_SEGMENTS, *,
                     h: float = DEFAULT_STEP, tol: float = 1e-6, reference=None) -> HolonomyResult:
    """Holonomy of ``loop`` expressed in the base-point frame.

    Frames are tracked through all segment vertices and midpoints; the field
    is sampled at midpoints.  The mismatch between the transported frame at
    the end of the loop and the base frame enters as ``closure``, so the
    result does not depend on the gauge used along the way.
    """
    if not loop.closed:
        raise LoopNotClosed("holonomy needs a closed loop")
    nodes = loop.refine(n_steps)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    seq = np.empty((2 * len(mids) + 1, loop.chart_dim))
    seq[0::2] = nodes
    seq[1::2] = mids
    if family.hamiltonian_batch is not None and family.metric_batch is not None:
        first = level_frame(family, seq[0], level, gap_tol=tol)
        if reference is not None:
            first = project_reference(first, reference(seq[0]))
        samples, base, end = _holonomy_batched(family, seq, first, h, tol, reference)
    else:
        frames = smooth_frame_along_path(family, seq, level, tol, reference)
        samples = [gauge_field(family, f, h, reference=reference, gap_tol=tol) for f in frames[1::2]]
        base, end = frames[0], frames[-1]
    closure = base.left.conj().T @ end.right
    dense = ParamLoop(nodes, True)
    transport = path_ordered_exponential(samples, dense)
    U = closure @ transport.matrix
    eta_d = base.right.conj().T @ family.metric_at(base.point).matrix @ base.right
    return HolonomyResult(U, transport.steps, pseudo_unitarity_residual(U, eta_d), transport.segment_log, base, closure,
                          samples)


def abelian_phase(samples: Sequence[GaugeFieldSample], path: ParamLoop) -> float:
    """``oint A`` for a one-dimensional level (the Berry-type phase)."""
    steps = np.diff(path.points, axis=0)
    return float(sum(np.real(np.dot(d, s.components[:, 0, 0])) for s, d in zip(samples, steps)))


def dynamical_phase(energy: Callable[[np.ndarray], np.ndarray], T: float, n_steps: int = 1000) -> complex:
    """``exp(-i int_0^T E0(t) dt)`` by the trapezoidal rule."""
    if T <= 0:
        raise ValueError("T must be positive")
    t = np.linspace(0.0, T, n_steps + 1)
    e = np.broadcast_to(np.asarray(energy(t), dtype=float), t.shape)
    return complex(np.exp(-1j * np.trapezoid(e, t)))
