"""Axisymmetric cell-centred grids on the unit sphere and the unit ball.

Surface cells are centred at theta_j = (j + 1/2) pi / N_theta and bulk cells at
(r_i, theta_j) with r_i = (i + 1/2) / N_r. No cell centre sits on a pole or at the
origin, and every operator is written in flux form so that the quadrature
weights below make it exactly conservative.
"""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy import sparse

from polarity_lab.core.exceptions import DomainError
from polarity_lab.core.specfun import legendre_p

#: Smallest admissible number of cells along theta or r
MIN_CELLS = 16

Field = npt.NDArray[np.float64]


class SurfaceGrid:
    """A cell-centred grid in the polar angle of the unit sphere.

    Args:
        n_theta (int): The number of cells, at least 16.
    """

    def __init__(self, n_theta: int) -> None:
        if n_theta < MIN_CELLS:
            raise DomainError(f"N_theta = {n_theta} is below {MIN_CELLS}")
        self.n_theta = n_theta
        self.dtheta = math.pi / n_theta
        self.theta: Field = (np.arange(n_theta) + 0.5) * self.dtheta
        self.sin_centres: Field = np.sin(self.theta)
        edges = np.sin(np.arange(n_theta + 1) * self.dtheta)
        edges[0] = edges[-1] = 0.0
        #: sin(theta) at the cell faces, zero at both poles
        self.sin_faces: Field = edges
        #: Area of each surface cell
        self.weights: Field = 2.0 * math.pi * self.sin_centres * self.dtheta
        self.area = float(self.weights.sum())
        self.cos_theta: Field = np.cos(self.theta)

    def laplacian_bands(self, coeff: float) -> Tuple[Field, Field, Field]:
        """The lower, main and upper diagonals of coeff * Laplace-Beltrami.

        Returns:
            Tuple[Field, Field, Field]: Diagonals of length N-1, N and N-1.
        """
        scale = coeff / (self.sin_centres * self.dtheta**2)
        left = self.sin_faces[:-1]
        right = self.sin_faces[1:]
        return (
            (scale * left)[1:],
            -scale * (left + right),
            (scale * right)[:-1],
        )

    def legendre_projector(self, l_max: int) -> Field:
        """Rows mapping a field to its Legendre amplitudes a_0 ... a_lmax.

        a_l = (2l + 1)/2 * sum_j w_j P_l(cos theta_j) sin theta_j dtheta.
        """
        rows = [
            (2 * l + 1) / 2.0
            * legendre_p(l, self.cos_theta)
            * self.sin_centres
            * self.dtheta
            for l in range(l_max + 1)
        ]
        return np.vstack(rows)


@lru_cache(maxsize=16)
def surface_grid(n_theta: int) -> SurfaceGrid:
    """A shared surface grid of n_theta cells."""
    return SurfaceGrid(n_theta)


def laplace_beltrami_axisym(w: Field, coeff: float = 1.0) -> Field:
    """Applies coeff times the axisymmetric Laplace-Beltrami operator.

    The operator is the conservative second difference
    (1 / (sin theta_j dtheta)) [sin theta_{j+1/2} (w_{j+1} - w_j) / dtheta
    - sin theta_{j-1/2} (w_j - w_{j-1}) / dtheta], with no flux through the poles.

    Args:
        w (Field): Cell values on the sphere.
        coeff (float): The nonnegative diffusion coefficient.

    Returns:
        Field: The result at the cell centres.
    """
    grid = surface_grid(len(w))
    lower, diag, upper = grid.laplacian_bands(coeff)
    out = diag * w
    out[1:] += lower * w[:-1]
    out[:-1] += upper * w[1:]
    return out


def surface_integral(w: Field) -> float:
    """The midpoint quadrature 2 pi sum_j w_j sin theta_j dtheta."""
    return float(surface_grid(len(w)).weights @ w)


def surface_mean(w: Field) -> float:
    """The area-weighted mean of a surface field."""
    grid = surface_grid(len(w))
    return float(grid.weights @ w) / grid.area


def legendre_amplitudes(w: Field, l_max: int) -> Field:
    """The Legendre amplitudes a_0 ... a_lmax of a surface field."""
    return surface_grid(len(w)).legendre_projector(l_max) @ w


class BulkGrid:
    """A cell-centred (r, theta) grid of the unit ball under axisymmetry.

    Args:
        n_r (int): The number of radial cells, at least 16.
        surface (SurfaceGrid): The angular grid, shared with the membrane.
    """

    def __init__(self, n_r: int, surface: SurfaceGrid) -> None:
        if n_r < MIN_CELLS:
            raise DomainError(f"N_r = {n_r} is below {MIN_CELLS}")
        self.n_r = n_r
        self.surface = surface
        self.dr = 1.0 / n_r
        self.r: Field = (np.arange(n_r) + 0.5) * self.dr
        n_theta, dth = surface.n_theta, surface.dtheta
        #: Cell volumes, shape (N_r, N_theta)
        self.volumes: Field = (
            2.0 * math.pi * np.outer(self.r**2 * self.dr, surface.sin_centres * dth)
        )
        self.shape = (n_r, n_theta)
        self.size = n_r * n_theta

    def index(self, i: int, j: int) -> int:
        """The position of cell (i, j) in the flattened field."""
        return i * self.surface.n_theta + j

    def stiffness(self, coeff: float) -> sparse.csr_matrix:
        """The symmetric positive semidefinite matrix K of -coeff * Laplacian.

        K V is the net diffusive outflow of each cell; rows sum to zero and the
        outer boundary is closed, so fluxes through r = 1 are added separately.
        """
        n_r, n_theta = self.shape
        dth = self.surface.dtheta
        rows, cols, vals = [], [], []

        def connect(a: int, b: int, conductance: float) -> None:
            rows.extend((a, b, a, b))
            cols.extend((a, b, b, a))
            vals.extend((conductance, conductance, -conductance, -conductance))

        for i in range(n_r - 1):
            r_face = (i + 1) * self.dr
            for j in range(n_theta):
                area = 2.0 * math.pi * r_face**2 * self.surface.sin_centres[j] * dth
                connect(self.index(i, j), self.index(i + 1, j), coeff * area / self.dr)
        for i in range(n_r):
            for j in range(n_theta - 1):
                area = 2.0 * math.pi * self.dr * self.surface.sin_faces[j + 1]
                connect(self.index(i, j), self.index(i, j + 1), coeff * area / dth)
        return sparse.coo_matrix(
            (vals, (rows, cols)), shape=(self.size, self.size)
        ).tocsr()

    def trace(self, V: Field) -> Field:
        """The value at r = 1, extrapolated linearly from the two outer cells."""
        return 1.5 * V[-1] - 0.5 * V[-2]

    def integral(self, V: Field) -> float:
        """The volume integral of a bulk field."""
        return float(np.sum(self.volumes * V))


def spot_count(w: Field, level: float) -> int:
    """Counts the maximal runs of consecutive cells with w_j > level.

    The poles are distinct points, so runs at j = 0 and j = N - 1 are separate.

    >>> spot_count(np.array([1.0, 1.0, 0.0, 0.0, 1.0]), 0.5)
    2
    """
    above = np.asarray(w) > level
    starts = above & ~np.concatenate(([False], above[:-1]))
    return int(np.count_nonzero(starts))
