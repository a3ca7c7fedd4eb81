"""Modal analysis of the phase-dependent systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, ModelError
from .model import Phase, SystemModel, reduce


@dataclass(frozen=True)
class ModalBasis:
    """Mass-normalised modes of one stiffness phase.

    ``shapes`` holds one column per mode with nodal (full) length, so locked
    nodes appear as zero rows. ``M`` is the full mass matrix used for the
    projection ``q = shapes.T @ M @ u``.
    """

    phase: Phase | None
    eigenvalues: np.ndarray
    shapes: np.ndarray
    M: np.ndarray
    modal_mass: np.ndarray
    modal_damping: np.ndarray
    modal_stiffness: np.ndarray
    rayleigh: tuple[float, float] | None = None

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None)) / (2 * np.pi)


def _check_symmetric(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ModelError(f"{name} must be square")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ModelError(f"{name} is not symmetric")
    return A


def _fix_signs(Phi: np.ndarray) -> np.ndarray:
    Phi = Phi.copy()
    for j in range(Phi.shape[1]):
        col = Phi[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-14 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            Phi[:, j] = -col
    return Phi


def solve_basis(M, K, C=None, *, T=None, phase=None, rayleigh=None) -> ModalBasis:
    """Solve ``K phi = lam M phi`` for mass-normalised modes.

    With a reduction map ``T`` the problem is solved on the free coordinates
    and the shapes are embedded back into nodal space.
    """
    M = _check_symmetric(M, "M")
    K = _check_symmetric(K, "K")
    C = np.zeros_like(M) if C is None else _check_symmetric(C, "C")
    if T is None:
        T = np.eye(M.shape[0])
    Mr, Kr, Cr = T.T @ M @ T, T.T @ K @ T, T.T @ C @ T
    try:
        lam, Phi_r = scipy.linalg.eigh(Kr, Mr)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"mass matrix is not positive definite: {exc}") from None
    Phi = _fix_signs(T @ Phi_r)
    Phi_r = np.linalg.lstsq(T, Phi, rcond=None)[0]
    return ModalBasis(
        phase=phase,
        eigenvalues=lam,
        shapes=Phi,
        M=M,
        modal_mass=Phi_r.T @ Mr @ Phi_r,
        modal_damping=Phi_r.T @ Cr @ Phi_r,
        modal_stiffness=Phi_r.T @ Kr @ Phi_r,
        rayleigh=rayleigh,
    )


def modal_basis(model: SystemModel, phase: Phase) -> ModalBasis:
    sys = reduce(model, phase)
    return solve_basis(
        sys.M, sys.K, sys.C, T=sys.T, phase=sys.phase, rayleigh=(model.alpha, model.beta)
    )


def to_modal(basis: ModalBasis, u, v=None):
    """Project nodal displacements (and velocities) onto the basis."""
    P = basis.shapes.T @ basis.M
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != P.shape[1]:
        raise DomainError(f"expected {P.shape[1]} nodal values, got {u.shape[-1]}")
    q = u @ P.T
    if v is None:
        return q
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != P.shape[1]:
        raise DomainError(f"expected {P.shape[1]} nodal values, got {v.shape[-1]}")
    return q, v @ P.T


def from_modal(basis: ModalBasis, q, q_dot=None):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != basis.n_modes:
        raise DomainError(f"expected {basis.n_modes} modal values, got {q.shape[-1]}")
    u = q @ basis.shapes.T
    if q_dot is None:
        return u
    q_dot = np.asarray(q_dot, dtype=float)
    if q_dot.shape[-1] != basis.n_modes:
        raise DomainError(f"expected {basis.n_modes} modal values, got {q_dot.shape[-1]}")
    return u, q_dot @ basis.shapes.T


def change_basis(q_from, basis_from: ModalBasis, basis_to: ModalBasis):
    """Re-express modal coordinates in another basis through nodal space."""
    if basis_from.shapes.shape[0] != basis_to.shapes.shape[0]:
        raise DomainError("bases describe different node sets")
    return to_modal(basis_to, from_modal(basis_from, q_from))


def global_scaling_predicts(basis: ModalBasis, gamma: float) -> ModalBasis:
    """Basis of ``gamma * K``: same shapes, eigenvalues scaled by ``gamma``."""
    if not gamma > 0:
        raise DomainError(f"scale factor must be positive, got {gamma}")
    Kt = gamma * basis.modal_stiffness
    if basis.rayleigh is not None:
        alpha, beta = basis.rayleigh
        Ct = alpha * basis.modal_mass + beta * Kt
    else:
        Ct = basis.modal_damping
    return ModalBasis(
        phase=basis.phase,
        eigenvalues=gamma * basis.eigenvalues,
        shapes=basis.shapes,
        M=basis.M,
        modal_mass=basis.modal_mass,
        modal_damping=Ct,
        modal_stiffness=Kt,
        rayleigh=basis.rayleigh,
    )
