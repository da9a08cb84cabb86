"""Vibration-mode decomposition of an assembled system.

Solves K E = M E Lambda with M-orthonormal eigenvectors. The lowest
(near-zero) eigenvalues are the rigid transformations: 3 in 2D, 6 in 3D
for an unconstrained connected mesh; everything above is deformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import FemSystem

RIGID_EIGENVALUE_RATIO = 1e-9


class EigenSolveError(RuntimeError):
    pass


@dataclass
class ModalBasis:
    eigvals: np.ndarray   # ascending
    eigvecs: np.ndarray   # columns are modes, M-orthonormal
    n_rigid: int

    @property
    def n_modes(self) -> int:
        return len(self.eigvals)

    def deformation_slice(self) -> slice:
        return slice(self.n_rigid, self.n_modes)


def modal_decomposition(system: FemSystem,
                        rigid_ratio: float = RIGID_EIGENVALUE_RATIO) -> ModalBasis:
    """Generalized eigen-decomposition of (K, M)."""
    try:
        eigvals, eigvecs = scipy.linalg.eigh(system.K, system.M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        residual = getattr(exc, "info", None)
        raise EigenSolveError(f"generalized eigensolve failed ({exc}); "
                              f"residual info: {residual}") from exc
    max_ev = float(np.max(np.abs(eigvals))) if len(eigvals) else 0.0
    n_rigid = int(np.sum(eigvals < rigid_ratio * max_ev)) if max_ev > 0 else len(eigvals)
    return ModalBasis(eigvals=eigvals, eigvecs=eigvecs, n_rigid=n_rigid)


def modal_residuals(system: FemSystem, basis: ModalBasis) -> tuple[float, float]:
    """(relative eigen residual, M-orthonormality residual), both Frobenius."""
    K, M = system.K, system.M
    E, lam = basis.eigvecs, basis.eigvals
    res = np.linalg.norm(K @ E - M @ E @ np.diag(lam)) / max(np.linalg.norm(K), 1e-300)
    ortho = np.linalg.norm(E.T @ M @ E - np.eye(len(lam)))
    return float(res), float(ortho)
