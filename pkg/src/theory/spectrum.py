from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..tensor import GaussianSampler

_BASIS_STREAM = 0


@dataclass(frozen=True)
class SpectrumModel:
    """Covariance Sigma = V diag(eigenvalues) V^T, eigenvalues descending, columns of V orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.eigenvalues, dtype=np.float64)
        vectors = np.asarray(self.eigenvectors, dtype=np.float64)
        d = values.size
        if vectors.shape != (d, d):
            raise ContractError(f"{d} eigenvalues but eigenvector matrix of shape {vectors.shape}")
        if np.any(np.diff(values) > 0):
            raise ContractError("eigenvalues must be in descending order")
        if not np.allclose(vectors.T @ vectors, np.eye(d), rtol=0.0, atol=1e-10):
            raise ContractError("eigenvectors are not orthonormal")
        object.__setattr__(self, "eigenvalues", values)
        object.__setattr__(self, "eigenvectors", vectors)

    @property
    def d(self) -> int:
        return self.eigenvalues.size

    @property
    def covariance(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    def projector(self, k: int) -> np.ndarray:
        """Orthogonal projector onto the span of the top-k eigenvectors."""
        top = self.eigenvectors[:, :k]
        return top @ top.T

    def operator(self, weights: np.ndarray) -> np.ndarray:
        """Matrix sharing the eigenbasis with eigenvalues `weights`."""
        return (self.eigenvectors * weights) @ self.eigenvectors.T


def power_law_eigenvalues(d: int, R: float) -> np.ndarray:
    """lambda_k = R^2 / sqrt(k), k = 1..d."""
    if d < 2:
        raise ContractError(f"dimension must be at least 2, got {d}")
    return R * R / np.sqrt(np.arange(1, d + 1, dtype=np.float64))


def random_orthonormal_basis(d: int, seed: int) -> np.ndarray:
    gaussian = GaussianSampler(seed, _BASIS_STREAM).normal((d, d))
    q, r = np.linalg.qr(gaussian)
    # fix column signs so the basis is unique for a given draw
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def power_law_spectrum(d: int, R: float, seed: int = 0) -> SpectrumModel:
    return SpectrumModel(power_law_eigenvalues(d, R), random_orthonormal_basis(d, seed))


def denoise_operator(spec: SpectrumModel, gamma: float) -> np.ndarray:
    """M* = Sigma (Sigma + gamma I)^-1: eigenvalues lambda_i / (lambda_i + gamma) on Sigma's eigenbasis."""
    if gamma <= 0:
        raise ContractError(f"denoising noise variance must be positive, got {gamma}")
    return spec.operator(spec.eigenvalues / (spec.eigenvalues + gamma))


def denoised_trace(eigenvalues: np.ndarray, gamma: float) -> float:
    """tr(M* Sigma M*) from the eigenvalues alone."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    return float(np.sum(lam ** 3 / (lam + gamma) ** 2))


def high_pass_fraction(w: np.ndarray, spec: SpectrumModel, threshold: float) -> float:
    """Share of |w|^2 carried by eigenvectors whose eigenvalue is below `threshold`."""
    coords = spec.eigenvectors.T @ w
    total = float(coords @ coords)
    if total == 0.0:
        return 0.0
    low = spec.eigenvalues < threshold
    return float(coords[low] @ coords[low]) / total
