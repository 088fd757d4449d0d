"""Channel statistics, coloring factors, and reproducible training draws.

The cascaded channel is x = g * h (elementwise). Its correlation and the
interference-link correlation follow from the Schur product closure:
R_x = R_g * R_h and R_q = R_g * R_e entrywise.

Random draws are tied to a counter-style stream layout so that any trial
of any sweep point can be regenerated in isolation: the SeedSequence
entropy is [seed, STREAM_TAG, point_key, stream_key, trial].
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .geometry import ElementGrid
from .spatial import (
    CorrelationMatrix,
    NodePlacement,
    ScatteringProfile,
    ff_correlation,
    nf_correlation,
)

__all__ = [
    "ColoringFactor",
    "ScenarioModel",
    "TrainingRealization",
    "color_factor",
    "hadamard_cov",
    "complex_normal",
    "trial_rng",
    "draw_white",
    "realize_training",
    "STREAM_TAG",
]

STREAM_TAG = 0x4E465249

EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class ColoringFactor:
    """Tall factor L with L L^H equal to a correlation matrix.

    Columns span the numerically nonzero eigenspace, so white vectors of
    length rank color into full-dimension correlated vectors.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def transposed(self) -> np.ndarray:
        t = np.ascontiguousarray(self.matrix.T)
        t.setflags(write=False)
        return t

    def color(self, white: np.ndarray) -> np.ndarray:
        """Map white (..., rank) draws to correlated (..., n) vectors."""
        return white @ self.transposed


def color_factor(m) -> ColoringFactor:
    """Eigenvalue-based factor of a Hermitian PSD matrix.

    Eigenvalues below EIG_FLOOR * max are dropped; columns are ordered by
    descending eigenvalue. Eigendecomposition is used instead of Cholesky
    because the quadrature matrices are usually rank deficient.
    """
    entries = m.entries if isinstance(m, CorrelationMatrix) else np.asarray(m)
    w, v = np.linalg.eigh(entries)
    w = w[::-1]
    v = v[:, ::-1]
    keep = w > EIG_FLOOR * max(w[0], 0.0)
    return ColoringFactor(matrix=v[:, keep] * np.sqrt(w[keep]))


def hadamard_cov(a: CorrelationMatrix, b: CorrelationMatrix) -> CorrelationMatrix:
    """Entrywise product of two correlation matrices (PSD by the Schur theorem)."""
    entries = a.entries * b.entries
    power = float(np.trace(entries).real) / entries.shape[0]
    kind = a.kind if a.kind == b.kind else "NF"
    return CorrelationMatrix(entries=entries, power=power, kind=kind)


@dataclass(frozen=True)
class ScenarioModel:
    """Array geometry plus the three link endpoints and their statistics.

    field selects the response model used for every correlation matrix:
    "NF" integrates spherical-wave responses over the full scattering box,
    "FF" uses plane-wave responses and angular spreads only.
    """

    grid: ElementGrid
    tx: NodePlacement
    rx: NodePlacement
    emi: NodePlacement
    profile: ScatteringProfile = ScatteringProfile()
    field_kind: str = "NF"

    def __post_init__(self):
        if self.field_kind not in ("NF", "FF"):
            raise ValueError(f"field_kind must be 'NF' or 'FF', got {self.field_kind!r}")

    def with_field(self, field_kind: str) -> "ScenarioModel":
        return replace(self, field_kind=field_kind)

    def _correlation(self, node: NodePlacement) -> CorrelationMatrix:
        builder = nf_correlation if self.field_kind == "NF" else ff_correlation
        return builder(node, self.grid, self.profile)

    @cached_property
    def r_h(self) -> CorrelationMatrix:
        return self._correlation(self.tx)

    @cached_property
    def r_g(self) -> CorrelationMatrix:
        return self._correlation(self.rx)

    @cached_property
    def r_e(self) -> CorrelationMatrix:
        return self._correlation(self.emi)

    @cached_property
    def r_x(self) -> CorrelationMatrix:
        return hadamard_cov(self.r_g, self.r_h)

    @cached_property
    def r_q(self) -> CorrelationMatrix:
        return hadamard_cov(self.r_g, self.r_e)

    @cached_property
    def factors(self) -> tuple:
        """Coloring factors (L_h, L_g, L_e) for draw generation."""
        return color_factor(self.r_h), color_factor(self.r_g), color_factor(self.r_e)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric unit-variance complex Gaussian draws."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def trial_rng(seed: int, point_key: int, stream_key: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial of one stream of one sweep point."""
    seq = np.random.SeedSequence(entropy=[seed, STREAM_TAG, point_key, stream_key, trial])
    return np.random.Generator(np.random.PCG64(seq))


def draw_white(rng: np.random.Generator, m_h: int, m_g: int, m_e: int, n_uses: int):
    """White draws for one trial, in the fixed contract order.

    Order: channel h (m_h), channel g (m_g), interference (n_uses, m_e),
    receiver noise (n_uses,). All four are always drawn so that the
    stream position does not depend on which impairments are active.
    """
    v_h = complex_normal(rng, m_h)
    v_g = complex_normal(rng, m_g)
    v_e = complex_normal(rng, (n_uses, m_e))
    v_z = complex_normal(rng, n_uses)
    return v_h, v_g, v_e, v_z


@dataclass(frozen=True)
class TrainingRealization:
    """One draw of the channels and per-use impairments at unit power.

    e holds one interference vector per pilot use; sigma_e and sigma_z
    scaling is applied in observe so the same realization can be reused
    across power levels.
    """

    h: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.g * self.h

    def observe(self, phi: np.ndarray, rho: float, sigma_e: float,
                sigma_z: float) -> np.ndarray:
        """Pilot observations y(i) = sqrt(rho) phi_i^T x + phi_i^T (g*e_i) + z_i."""
        signal = np.sqrt(rho) * (phi @ self.x)
        emi = sigma_e * np.einsum("in,n,in->i", self.e, self.g, phi)
        return signal + emi + sigma_z * self.z


def realize_training(model: ScenarioModel, n_uses: int,
                     rng: np.random.Generator) -> TrainingRealization:
    """Draw one correlated training realization from the model statistics."""
    l_h, l_g, l_e = model.factors
    v_h, v_g, v_e, v_z = draw_white(rng, l_h.rank, l_g.rank, l_e.rank, n_uses)
    return TrainingRealization(
        h=l_h.color(v_h), g=l_g.color(v_g), e=l_e.color(v_e), z=v_z
    )
