"""Frames and projectors of one degenerate block.

A block of ``n_l`` right eigenvectors gives an ``N x n_l`` frame ``V``.  With
the big metric ``eta`` and a small one ``eta_a`` its pseudo-adjoint is
``V^ddag = eta_a^{-1} V^dagger eta``; the normalization ``V^ddag V = 1`` picks
frames in a (biorthogonal) Stiefel set, and ``Pi = V V^ddag`` is the point of
the Grassmannian that all frames of the block share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .biortho import (BiorthoSystem, MetricOperator, as_matrix, metric_from_left, pseudo_adjoint,
                      pseudo_unitarity_residual, relative_residual)
from .errors import DimensionMismatch, NotPseudoUnitary


def _metric(eta, n: int) -> MetricOperator:
    if eta is None:
        return MetricOperator.identity(n)
    if isinstance(eta, MetricOperator):
        return eta
    return MetricOperator.from_matrix(eta)


@dataclass(frozen=True)
class StiefelFrame:
    V: np.ndarray
    eta_big: MetricOperator
    eta_small: MetricOperator

    def __post_init__(self):
        V = as_matrix(self.V, "frame", square=False)
        if V.shape[0] != self.eta_big.dim or V.shape[1] != self.eta_small.dim:
            raise DimensionMismatch(
                f"frame {V.shape} vs metrics {self.eta_big.dim}, {self.eta_small.dim}")
        object.__setattr__(self, "V", V)

    @property
    def rank(self) -> int:
        return self.V.shape[1]

    def adjoint(self) -> np.ndarray:
        return frame_pseudo_adjoint(self)

    def normalization_residual(self) -> float:
        """``max |V^ddag V - 1|``."""
        return float(np.max(np.abs(self.adjoint() @ self.V - np.eye(self.rank))))

    def act(self, U) -> StiefelFrame:
        """Right action ``V -> V U``."""
        return StiefelFrame(self.V @ as_matrix(U, "U"), self.eta_big, self.eta_small)


def frame_pseudo_adjoint(frame: StiefelFrame) -> np.ndarray:
    """``eta_a^{-1} V^dagger eta`` (``n_l x N``)."""
    return frame.eta_small.inverse @ frame.V.conj().T @ frame.eta_big.matrix


def stiefel_frame(system: BiorthoSystem, level, eta_small=None, eta_big=None) -> StiefelFrame:
    """Frame of the block ``level`` normalized so that ``V^ddag V = 1``.

    ``eta_big`` defaults to ``L L^dagger`` of the system.  The block's right
    eigenvectors are recombined inside the block: ``V = R_b (R_b^dagger eta R_b)^{-1/2} eta_a^{1/2}``
    (for a biorthonormal system with ``eta = L L^dagger`` the first factor is the identity).
    """
    right, _ = system.frames(level)
    n = right.shape[1]
    eta = metric_from_left(system) if eta_big is None else _metric(eta_big, system.dim)
    eta_a = _metric(eta_small, n)
    if eta_a.dim != n:
        raise DimensionMismatch(f"eta_small has size {eta_a.dim}, block has {n} states")
    gram = right.conj().T @ eta.matrix @ right
    w, q = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    V = right @ (q / np.sqrt(w)) @ q.conj().T @ scipy.linalg.sqrtm(eta_a.matrix)
    return StiefelFrame(V, eta, eta_a)


@dataclass(frozen=True)
class GrassmannPoint:
    Pi: np.ndarray
    eta: MetricOperator

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.Pi).real))

    def idempotency_residual(self) -> float:
        return float(np.linalg.norm(self.Pi @ self.Pi - self.Pi))

    def self_adjoint_residual(self) -> float:
        """``|| Pi^ddag - Pi ||`` under ``eta``."""
        return float(np.linalg.norm(pseudo_adjoint(self.eta, self.Pi) - self.Pi))

    def metric_compatibility_residual(self) -> float:
        """``|| Pi^dagger eta - eta Pi ||``."""
        eta = self.eta.matrix
        return float(np.linalg.norm(self.Pi.conj().T @ eta - eta @ self.Pi))

    def trace_residual(self, expected: int) -> float:
        return float(abs(np.trace(self.Pi) - expected))


def grassmann_projector(frame: StiefelFrame) -> GrassmannPoint:
    return GrassmannPoint(frame.V @ frame.adjoint(), frame.eta_big)


def group_action_invariance(frame: StiefelFrame, U, tol: float = 1e-10) -> float:
    """``|| (V U)(V U)^ddag - V V^ddag ||_F`` for ``U`` pseudo-unitary under ``eta_a``."""
    U = as_matrix(U, "U")
    res = pseudo_unitarity_residual(U, frame.eta_small)
    if res > tol:
        raise NotPseudoUnitary(f"U is not pseudo-unitary under eta_a (residual {res:.3e})")
    moved = grassmann_projector(frame.act(U)).Pi
    return float(np.linalg.norm(moved - grassmann_projector(frame).Pi))


def composite_adjoint_residual(frame: StiefelFrame, U) -> float:
    """``|| (V U)^ddag - U^ddag V^ddag ||_F`` with ``U^ddag = eta_a^{-1} U^dagger eta_a``."""
    U = as_matrix(U, "U")
    lhs = frame.act(U).adjoint()
    rhs = pseudo_adjoint(frame.eta_small, U) @ frame.adjoint()
    return float(np.linalg.norm(lhs - rhs))


def frame_relation(first: StiefelFrame, second: StiefelFrame) -> tuple[np.ndarray, float, float]:
    """``U = V1^ddag V2`` together with ``||V1 U - V2||`` and the pseudo-unitarity residual of ``U``.

    Both residuals vanish iff the two frames span the same block.
    """
    U = first.adjoint() @ second.V
    return U, relative_residual(first.V @ U - second.V, second.V), pseudo_unitarity_residual(U, first.eta_small)


def random_pseudo_unitary(eta_small, seed=None, scale: float = 1.0) -> np.ndarray:
    """``exp(i s X)`` with ``X = eta_a^{-1} Y`` (``Y`` Hermitian), pseudo-Hermitian under ``eta_a``.

    ``eta_small`` may be an ``int`` (identity metric of that size).
    """
    if isinstance(eta_small, (int, np.integer)):
        eta = MetricOperator.identity(int(eta_small))
    else:
        eta = _metric(eta_small, 0)
    rng = np.random.default_rng(seed)
    n = eta.dim
    Y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Y = 0.5 * (Y + Y.conj().T)
    s = scale * rng.uniform(0.1, 2.0)
    return scipy.linalg.expm(1j * s * eta.inverse @ Y)


def random_metric(n: int, seed=None, spread: float = 4.0) -> MetricOperator:
    """Diagonal positive metric with entries in ``[1, spread]``."""
    rng = np.random.default_rng(seed)
    return MetricOperator.from_matrix(np.diag(rng.uniform(1.0, spread, size=n)).astype(complex))
