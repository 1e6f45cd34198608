"""Array geometry and one-ring spatial correlation.

Each cluster sees the array through a uniform power azimuth spectrum on
``[theta - delta, theta + delta]`` with planar-wave steering. The
correlation matrix is normalized to unit diagonal, so ``trace(R) = M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ClusterGeometry",
    "CorrelationMatrix",
    "build_uca",
    "half_wavelength_radius",
    "steering_matrix",
    "build_correlation",
    "eigen_truncate",
    "cluster_correlation",
    "effective_rank",
]

DEFAULT_QUADRATURE_POINTS = 2048
DEFAULT_EIG_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ArrayGeometry:
    num_antennas: int
    radius_wavelengths: float
    element_positions: np.ndarray = field(repr=False)  # (M, 2), in wavelengths


@dataclass(frozen=True)
class ClusterGeometry:
    center_azimuth: float  # radians
    angular_spread: float  # half-width, radians
    cluster_id: int = 1

    def __post_init__(self):
        if not 0.0 <= self.angular_spread <= np.pi:
            raise ValueError(
                f"angular spread must lie in [0, pi], got {self.angular_spread!r}"
            )


@dataclass(frozen=True)
class CorrelationMatrix:
    """Correlation matrix with its truncated eigenstructure.

    ``eigvecs`` is ``r x M`` with orthonormal rows and ``eigvals`` holds
    the ``r`` retained eigenvalues in nonincreasing order, so that
    ``R ~= eigvecs^H diag(eigvals) eigvecs``.
    """

    R: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)
    eigvals: np.ndarray
    rank: int

    def reconstruct(self) -> np.ndarray:
        U = self.eigvecs
        return (U.conj().T * self.eigvals) @ U


def build_uca(M: int, radius_wavelengths: float) -> ArrayGeometry:
    """Uniform circular array; element m sits at angle 2*pi*m/M."""
    if M < 1:
        raise ValueError(f"need at least one antenna, got M={M}")
    if radius_wavelengths < 0:
        raise ValueError(f"radius must be nonnegative, got {radius_wavelengths}")
    angles = 2.0 * np.pi * np.arange(M) / M
    pos = radius_wavelengths * np.column_stack([np.cos(angles), np.sin(angles)])
    return ArrayGeometry(M, float(radius_wavelengths), pos)


def half_wavelength_radius(M: int) -> float:
    """Radius giving half-wavelength spacing between adjacent UCA elements."""
    if M < 2:
        return 0.0
    return 0.25 / np.sin(np.pi / M)


def steering_matrix(array: ArrayGeometry, azimuths: np.ndarray) -> np.ndarray:
    """Planar-wave steering vectors, one column per azimuth: shape (M, n)."""
    azimuths = np.atleast_1d(np.asarray(azimuths, dtype=float))
    directions = np.stack([np.cos(azimuths), np.sin(azimuths)])
    return np.exp(2j * np.pi * (array.element_positions @ directions))


def build_correlation(
    array: ArrayGeometry,
    cluster: ClusterGeometry,
    quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
) -> np.ndarray:
    """Raw (untruncated) one-ring correlation matrix by midpoint quadrature.

    The angular average of ``a(alpha) a(alpha)^H`` over the cluster sector.
    A zero spread collapses to the single ray ``a(theta) a(theta)^H``.
    """
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be >= 1")
    theta, delta = cluster.center_azimuth, cluster.angular_spread
    if delta < 0:
        raise ValueError("angular spread must be nonnegative")
    if delta == 0.0:
        nodes = np.array([theta])
    else:
        step = 2.0 * delta / quadrature_points
        nodes = theta - delta + (np.arange(quadrature_points) + 0.5) * step
    A = steering_matrix(array, nodes)
    R = (A @ A.conj().T) / nodes.size
    R = 0.5 * (R + R.conj().T)
    # |a_m|^2 = 1 for every node, so the diagonal is exactly one
    np.fill_diagonal(R, 1.0)
    return R


def eigen_truncate(R: np.ndarray, threshold: float = DEFAULT_EIG_THRESHOLD):
    """Keep eigenpairs with eigenvalue above ``threshold * lambda_max``.

    Returns ``(U, lam)`` with ``U`` of shape ``(r, M)`` (orthonormal rows)
    and ``lam`` nonincreasing.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    w, V = np.linalg.eigh(R)
    w, V = w[::-1], V[:, ::-1]
    if w[0] <= 0:
        raise ValueError("correlation matrix has no positive eigenvalue")
    keep = w > threshold * w[0]
    r = int(np.count_nonzero(keep))
    if r == 0:
        raise ValueError("degenerate cluster: every eigenvalue is below the threshold")
    return V[:, :r].conj().T.copy(), w[:r].copy()


def cluster_correlation(
    array: ArrayGeometry,
    cluster: ClusterGeometry,
    quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
    threshold: float = DEFAULT_EIG_THRESHOLD,
) -> CorrelationMatrix:
    R = build_correlation(array, cluster, quadrature_points)
    U, lam = eigen_truncate(R, threshold)
    return CorrelationMatrix(R, U, lam, lam.size)


def effective_rank(R: np.ndarray, rel_tol: float = 1e-6) -> int:
    w = np.linalg.eigvalsh(R)
    return int(np.count_nonzero(w > rel_tol * w.max()))
