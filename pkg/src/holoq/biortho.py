"""Biorthogonal linear algebra for pseudo-Hermitian matrices.

A diagonalizable ``H`` has right eigenvectors (columns of ``R``) and left
eigenvectors (columns of ``L``) with ``L^dagger R = 1``.  The metric
``eta = L L^dagger`` turns ``H`` into an operator that is Hermitian with
respect to ``<phi|eta|psi>`` whenever the spectrum is real.

Matrices are plain complex ``numpy`` arrays throughout.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .errors import DimensionMismatch, InvalidMetric, LevelNotFound, NonDiagonalizable, NotPositiveDefinite

log = logging.getLogger(__name__)

#: relative reconstruction residual above which ``H`` is treated as defective
EXCEPTIONAL_POINT_THRESHOLD = 1e-6
#: eigenvector condition number above which ``H`` is treated as defective
MAX_EIGENVECTOR_CONDITION = 1e12


def as_matrix(m, name: str = "matrix", square: bool = True) -> np.ndarray:
    """Validate and convert ``m`` to a finite 2-D complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _check_dims(*pairs):
    for label, n, m in pairs:
        if n != m:
            raise DimensionMismatch(f"{label}: {n} != {m}")


def relative_residual(residual: np.ndarray, reference: np.ndarray) -> float:
    """Frobenius norm of ``residual`` scaled by that of ``reference``."""
    scale = np.linalg.norm(reference)
    r = float(np.linalg.norm(residual))
    return r / scale if scale > 0 else r


@dataclass(frozen=True)
class MetricOperator:
    """Hermitian positive-definite metric with its cached inverse."""

    matrix: np.ndarray
    inverse: np.ndarray
    hermiticity_residual: float
    min_eigenvalue: float

    @classmethod
    def from_matrix(cls, eta, *, hermiticity_tol: float = 1e-8) -> MetricOperator:
        eta = as_matrix(eta, "metric")
        herm = relative_residual(eta - eta.conj().T, eta)
        if herm > hermiticity_tol:
            raise InvalidMetric(f"metric is not Hermitian (residual {herm:.3e})")
        lam_min = float(np.linalg.eigvalsh(0.5 * (eta + eta.conj().T))[0])
        if lam_min <= 0:
            raise NotPositiveDefinite(f"metric has eigenvalue {lam_min:.3e} <= 0")
        return cls(eta, np.linalg.inv(eta), herm, lam_min)

    @classmethod
    def identity(cls, n: int) -> MetricOperator:
        eye = np.eye(n, dtype=complex)
        return cls(eye, eye.copy(), 0.0, 1.0)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, frame: np.ndarray) -> MetricOperator:
        """Metric induced on the column span of ``frame``: ``F^dagger eta F``."""
        frame = as_matrix(frame, "frame", square=False)
        _check_dims(("frame rows vs metric", frame.shape[0], self.dim))
        return MetricOperator.from_matrix(frame.conj().T @ self.matrix @ frame)


def _metric_matrix(eta) -> np.ndarray:
    return eta.matrix if isinstance(eta, MetricOperator) else as_matrix(eta, "metric")


def _metric_inverse(eta) -> np.ndarray:
    return eta.inverse if isinstance(eta, MetricOperator) else np.linalg.inv(as_matrix(eta, "metric"))


@dataclass(frozen=True)
class Block:
    """A group of (numerically) degenerate eigenvalues, ``[start, stop)``."""

    eigenvalue: complex
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def indices(self) -> slice:
        return slice(self.start, self.stop)


@dataclass(frozen=True)
class BiorthoSystem:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    blocks: tuple[Block, ...]
    degeneracy_tol: float
    matrix: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.right.shape[0]

    def block(self, level) -> Block:
        """Select a degeneracy block.

        ``level`` may be a :class:`Block`, an ``int`` block index, or an
        eigenvalue (the block whose eigenvalue is nearest is returned, provided
        it lies within ``1e-6 * (1 + max|E|)``).
        """
        if isinstance(level, Block):
            return level
        if isinstance(level, (int, np.integer)) and not isinstance(level, bool):
            try:
                return self.blocks[level]
            except IndexError:
                raise LevelNotFound(f"no block with index {level}") from None
        target = complex(level)
        dist = [abs(b.eigenvalue - target) for b in self.blocks]
        k = int(np.argmin(dist))
        if dist[k] > 1e-6 * (1 + np.max(np.abs(self.eigenvalues))):
            raise LevelNotFound(f"no eigenvalue near {target}")
        return self.blocks[k]

    def frames(self, level) -> tuple[np.ndarray, np.ndarray]:
        """Right and left sub-frames (``N x n``) of one block."""
        b = self.block(level)
        return self.right[:, b.indices], self.left[:, b.indices]

    def biorthonormality_residual(self) -> float:
        n = self.dim
        return float(np.max(np.abs(self.left.conj().T @ self.right - np.eye(n))))

    def reconstruction_residual(self, H=None) -> float:
        H = self.matrix if H is None else as_matrix(H)
        rebuilt = (self.right * self.eigenvalues) @ self.left.conj().T
        return relative_residual(rebuilt - H, H)


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clusters of ``values`` with ``|a - b| <= tol``."""
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component made real positive (first one on ties)
    k = int(np.argmax(np.abs(v) > np.max(np.abs(v)) * (1 - 1e-12)))
    return v * (abs(v[k]) / v[k])


def biorthogonal_eig(H, degeneracy_tol: float | None = None) -> BiorthoSystem:
    """Biorthonormal eigendecomposition of a diagonalizable matrix.

    Eigenvalues are grouped into blocks of width ``degeneracy_tol`` (default
    ``1e-8 * max|E|``) and sorted by real part, then imaginary part.  Right
    eigenvectors have unit Euclidean norm (an orthonormal basis inside each
    degenerate block); left eigenvectors are the rows of ``R^{-1}``, so
    ``L^dagger R = 1`` holds within every block and across blocks.

    Raises
    ------
    NonDiagonalizable
        If the eigenvector matrix is singular to working precision or
        ``R diag(E) L^dagger`` fails to reproduce ``H``.
    """
    H = as_matrix(H, "H")
    w, vr = scipy.linalg.eig(H)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    tol = 1e-8 * scale if degeneracy_tol is None else float(degeneracy_tol)

    clusters = _cluster(w, tol)
    means = [complex(np.mean(w[c])) for c in clusters]

    def cmp(a, b):
        ma, mb = means[a], means[b]
        if abs(ma.real - mb.real) > tol:
            return -1 if ma.real < mb.real else 1
        return (ma.imag > mb.imag) - (ma.imag < mb.imag)

    order = sorted(range(len(clusters)), key=functools.cmp_to_key(cmp))

    n = H.shape[0]
    E = np.empty(n, dtype=complex)
    R = np.empty((n, n), dtype=complex)
    blocks = []
    pos = 0
    for k in order:
        idx = clusters[k]
        vecs = vr[:, idx]
        if len(idx) == 1:
            vecs = _fix_phase(vecs[:, 0] / np.linalg.norm(vecs[:, 0]))[:, None]
        else:
            # solver vectors can coincide inside a degenerate block of a
            # non-normal matrix; the null space of H - E is robust
            _, _, vh = np.linalg.svd(H - means[k] * np.eye(H.shape[0]))
            vecs = vh[-len(idx):].conj().T
        m = len(idx)
        E[pos : pos + m] = means[k]
        R[:, pos : pos + m] = vecs
        blocks.append(Block(means[k], pos, pos + m))
        pos += m

    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > MAX_EIGENVECTOR_CONDITION:
        raise NonDiagonalizable(f"eigenvector matrix is singular (condition number {cond:.3e})")
    L = np.linalg.inv(R).conj().T
    system = BiorthoSystem(E, R, L, tuple(blocks), tol, H)
    resid = system.reconstruction_residual()
    if resid > EXCEPTIONAL_POINT_THRESHOLD:
        raise NonDiagonalizable(f"reconstruction residual {resid:.3e}: matrix is defective")
    return system


def system_from_frames(eigenvalues, right, left=None, *, degeneracy_tol: float = 1e-8, matrix=None) -> BiorthoSystem:
    """Wrap a known biorthonormal eigenframe (e.g. an analytic one).

    Columns are taken in the given order; consecutive equal eigenvalues form
    blocks.  When ``left`` is omitted it is computed as ``(R^{-1})^dagger``.
    """
    E = np.asarray(eigenvalues, dtype=complex)
    R = as_matrix(right, "right frame")
    L = np.linalg.inv(R).conj().T if left is None else as_matrix(left, "left frame")
    _check_dims(("eigenvalue count", E.size, R.shape[1]), ("left/right frames", L.shape[0], R.shape[0]))
    blocks = []
    start = 0
    for i in range(1, E.size + 1):
        if i == E.size or abs(E[i] - E[start]) > degeneracy_tol:
            blocks.append(Block(complex(E[start]), start, i))
            start = i
    mat = None if matrix is None else as_matrix(matrix, "H")
    return BiorthoSystem(E, R, L, tuple(blocks), degeneracy_tol, mat)


def metric_from_left(system: BiorthoSystem) -> MetricOperator:
    """``eta = sum_n |phi~_n><phi~_n|`` built from the left eigenframe."""
    L = system.left
    eta = MetricOperator.from_matrix(L @ L.conj().T)
    if system.matrix is not None:
        log.debug("metric_from_left: pseudo-Hermiticity residual %.3e", pseudo_hermiticity_residual(system.matrix, eta))
    return eta


def eta_inner(eta, phi, psi) -> complex:
    """``<phi|eta|psi>``."""
    m = _metric_matrix(eta)
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    _check_dims(("phi vs metric", phi.shape[0], m.shape[0]), ("psi vs metric", psi.shape[0], m.shape[0]))
    return complex(np.vdot(phi, m @ psi))


def pseudo_adjoint(eta, M) -> np.ndarray:
    """Square pseudo-adjoint ``eta^{-1} M^dagger eta``."""
    m = _metric_matrix(eta)
    M = as_matrix(M, "M")
    _check_dims(("M vs metric", M.shape[0], m.shape[0]))
    return _metric_inverse(eta) @ M.conj().T @ m


def pseudo_hermiticity_residual(H, eta) -> float:
    """``||H^dagger eta - eta H||_F / ||eta||_F``."""
    m = _metric_matrix(eta)
    H = as_matrix(H, "H")
    _check_dims(("H vs metric", H.shape[0], m.shape[0]))
    return relative_residual(H.conj().T @ m - m @ H, m)


def pseudo_unitarity_residual(U, eta) -> float:
    """``||U^dagger eta U - eta||_F / ||eta||_F``."""
    m = _metric_matrix(eta)
    U = as_matrix(U, "U")
    _check_dims(("U vs metric", U.shape[0], m.shape[0]))
    return relative_residual(U.conj().T @ m @ U - m, m)


def random_pseudo_hermitian(N: int, seed: int) -> tuple[np.ndarray, MetricOperator]:
    """Random ``H = S h S^{-1}`` with its metric ``eta = (S^{-1})^dagger S^{-1}``.

    ``h`` is a random Hermitian matrix and ``S`` has singular values drawn
    log-uniformly from ``[1, 10**1.5]``, so ``cond(S)`` stays below 1e3.
    Same ``(N, seed)`` gives bit-identical output.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    h = 0.5 * (a + a.conj().T) / np.sqrt(N)
    if N == 1:
        u = v = np.exp(2j * np.pi * rng.uniform(size=(1, 1)))
    else:
        u = unitary_group.rvs(N, random_state=rng)
        v = unitary_group.rvs(N, random_state=rng)
    s = 10 ** rng.uniform(0.0, 1.5, size=N)
    S = (u * s) @ v.conj().T
    S_inv = (v / s) @ u.conj().T
    H = S @ h @ S_inv
    if N == 1:
        H = H.real.astype(complex)
    eta = S_inv.conj().T @ S_inv
    eta = 0.5 * (eta + eta.conj().T)
    return H, MetricOperator.from_matrix(eta)
