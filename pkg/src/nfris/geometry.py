"""Uniform planar array geometry and near/far-field array responses.

The array sits in the yoz-plane with the reference element (index 0) at
the origin. Azimuth is measured in the xy-plane from the x-axis,
elevation from the xy-plane toward +z, so the unit wave vector of a
direction (az, el) is k = [cos(el)cos(az), cos(el)sin(az), sin(el)].
All response vectors are pure phase with a unit reference entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import response_matrix

__all__ = [
    "ArrayGeometry",
    "ElementGrid",
    "build_grid",
    "wave_vector",
    "element_distance",
    "nf_response",
    "ff_response",
    "fraunhofer_distance",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array layout.

    n_h, n_v : element counts along y (horizontal) and z (vertical)
    spacing : inter-element spacing in meters
    wavelength : carrier wavelength in meters
    """

    n_h: int
    n_v: int
    spacing: float
    wavelength: float

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("n_h and n_v must be at least 1")
        if self.spacing <= 0.0:
            raise ValueError("spacing must be positive")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    @property
    def aperture(self) -> float:
        """Diagonal aperture D = sqrt(n_h^2 + n_v^2) * spacing."""
        return math.hypot(self.n_h, self.n_v) * self.spacing


@dataclass(frozen=True)
class ElementGrid:
    """Element coordinates of an array, reference element first."""

    coordinates: np.ndarray = field(repr=False)  # (N, 3), x == 0 everywhere
    geometry: ArrayGeometry

    def __post_init__(self):
        self.coordinates.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return self.coordinates.shape[0]


def build_grid(geometry: ArrayGeometry) -> ElementGrid:
    """Lay out the array on the yoz-plane, row-major over (vertical, horizontal).

    Element (i_v, i_h) has coordinate (0, i_h*d, i_v*d), so index 0 sits
    at the origin and is the phase reference.
    """
    d = geometry.spacing
    i_h = np.arange(geometry.n_h)
    i_v = np.arange(geometry.n_v)
    yy, zz = np.meshgrid(i_h * d, i_v * d)  # rows indexed by i_v
    coords = np.column_stack([np.zeros(geometry.n_elements), yy.ravel(), zz.ravel()])
    return ElementGrid(coordinates=coords, geometry=geometry)


def wave_vector(azimuth: float, elevation: float) -> np.ndarray:
    """Unit wave vector k(az, el) = [cos(el)cos(az), cos(el)sin(az), sin(el)]."""
    cel = math.cos(elevation)
    return np.array([cel * math.cos(azimuth), cel * math.sin(azimuth), math.sin(elevation)])


def element_distance(r: float, azimuth: float, elevation: float, u: np.ndarray) -> float:
    """Distance from a source at (r, az, el) to the element at coordinate u.

    r_n = r * sqrt(1 - 2 k^T u / r + ||u||^2 / r^2); raises ValueError when
    the radicand is non-positive (source on/through the array).
    """
    ku = float(wave_vector(azimuth, elevation) @ u)
    u2 = float(np.dot(u, u))
    radicand = 1.0 - 2.0 * ku / r + u2 / (r * r)
    if radicand <= 0.0:
        raise ValueError("source point passes through the array plane (non-positive radicand)")
    return r * math.sqrt(radicand)


def nf_response(r: float, azimuth: float, elevation: float, grid: ElementGrid) -> np.ndarray:
    """Spherical-wavefront response, entries exp(j*2*pi/lambda*(r_n - r))."""
    point = np.array([[r, azimuth, elevation]])
    return response_matrix(point, grid.coordinates, grid.geometry.wavelength, near=True)[0]


def ff_response(azimuth: float, elevation: float, grid: ElementGrid) -> np.ndarray:
    """Plane-wave response, entries exp(-j*2*pi/lambda*k^T u_n)."""
    point = np.array([[np.inf, azimuth, elevation]])
    return response_matrix(point, grid.coordinates, grid.geometry.wavelength, near=False)[0]


def fraunhofer_distance(geometry: ArrayGeometry) -> float:
    """Near/far-field boundary 2*D^2/lambda of the array.

    Evaluated as 2*(n_h^2 + n_v^2)*spacing^2/lambda rather than via the
    aperture property: the square-root/square round trip loses the last
    bit on reference configurations that are exact in closed form.
    """
    count_sq = float(geometry.n_h**2 + geometry.n_v**2)
    return 2.0 * count_sq * geometry.spacing * geometry.spacing / geometry.wavelength
