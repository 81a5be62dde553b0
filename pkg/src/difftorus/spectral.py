"""Truncated Fourier calculus for smooth real functions on the torus.

A function a : T^N -> R on the unit torus T^N = R^N / Z^N is represented by
its Fourier coefficients on the symmetric mode cube {-D..D}^N in the basis
exp(2*pi*i*r.x).  Real-valuedness is the Hermitian constraint
coeff(-r) = conj(coeff(r)), enforced exactly by construction.

Nonlinear operations (products, pointwise exp/log) are evaluated on an
oversampled uniform grid with q*(2D+1) points per axis and refit.  With
q >= 2 the grid resolves all modes up to degree 2D without aliasing, so the
product of two degree-D series is exact on the retained band; energy spilled
beyond degree D is recorded on the result instead of being silently lost.

Coordinates live in [0, 1) and the torus has unit volume, so the mean value
of a function equals its 0-mode coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .config import EPS_POSITIVE, IMAG_ERROR, LOSS_FLAG
from .errors import ConsistencyError, DomainError, GridMismatchError

# When enabled, every operation re-checks Hermitian symmetry of its result.
_STRICT_CHECKS = False


def set_strict_checks(enabled: bool) -> None:
    """Toggle per-operation Hermitian symmetry checks (slow, for tests)."""
    global _STRICT_CHECKS
    _STRICT_CHECKS = bool(enabled)


@dataclass(frozen=True)
class GridSpec:
    """Discretization of T^N: retained degree and evaluation grid.

    dim:        number of torus dimensions N >= 1.
    degree:     max retained |r_j| per axis, D >= 1.
    oversample: grid points per axis are oversample*(2D+1); must be >= 2 so
                that degree-2D products are resolved alias-free.
    """

    dim: int
    degree: int
    oversample: int = 2

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.oversample < 2:
            raise ValueError(f"oversample must be >= 2, got {self.oversample}")
        if self.points_per_axis < 4 * self.degree + 1:
            raise ValueError("grid too coarse for alias-free products")

    @property
    def points_per_axis(self) -> int:
        return self.oversample * (2 * self.degree + 1)

    @property
    def modes_per_axis(self) -> int:
        return 2 * self.degree + 1

    @property
    def coeff_shape(self) -> tuple[int, ...]:
        return (self.modes_per_axis,) * self.dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    def grid_points(self) -> np.ndarray:
        """Uniform grid as an array of shape (points_per_axis**dim, dim)."""
        axes = [np.arange(self.points_per_axis) / self.points_per_axis] * self.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@lru_cache(maxsize=64)
def _mode_vectors(dim: int, degree: int) -> np.ndarray:
    """Array of shape (dim, *coeff_shape) holding r_j at each cube position."""
    axis = np.arange(-degree, degree + 1)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack(mesh, axis=0)


def _band_indices(degree: int, points: int) -> np.ndarray:
    # FFT bin of mode r is r mod points.
    return np.arange(-degree, degree + 1) % points


def _hermitize(coeffs: np.ndarray) -> np.ndarray:
    flipped = coeffs[(slice(None, None, -1),) * coeffs.ndim]
    return 0.5 * (coeffs + np.conj(flipped))


def _check_hermitian(coeffs: np.ndarray) -> None:
    flipped = coeffs[(slice(None, None, -1),) * coeffs.ndim]
    resid = np.max(np.abs(coeffs - np.conj(flipped)))
    scale = max(1.0, float(np.max(np.abs(coeffs))) if coeffs.size else 1.0)
    if resid > IMAG_ERROR * scale:
        raise ConsistencyError(f"Hermitian symmetry broken, residue {resid:.3e}")


@dataclass(frozen=True)
class FourierScalar:
    """A real scalar field on T^N as a truncated Fourier series.

    coeffs is complex with shape (2D+1,)*N; index i along each axis holds the
    mode r = i - D.  loss is the relative energy discarded by the truncation
    that produced this value (0 for exact constructions).
    """

    spec: GridSpec
    coeffs: np.ndarray
    loss: float = 0.0

    def __post_init__(self) -> None:
        if self.coeffs.shape != self.spec.coeff_shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} does not match "
                f"spec {self.spec.coeff_shape}"
            )
        self.coeffs.setflags(write=False)
        if _STRICT_CHECKS:
            _check_hermitian(self.coeffs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, spec: GridSpec) -> "FourierScalar":
        return cls(spec, np.zeros(spec.coeff_shape, dtype=complex))

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "FourierScalar":
        c = np.zeros(spec.coeff_shape, dtype=complex)
        c[(spec.degree,) * spec.dim] = value
        return cls(spec, c)

    @classmethod
    def from_modes(
        cls, spec: GridSpec, modes: Mapping[tuple[int, ...], complex]
    ) -> "FourierScalar":
        """Build from a sparse {r: coefficient} map; the conjugate mirror
        coefficient at -r is filled in automatically."""
        c = np.zeros(spec.coeff_shape, dtype=complex)
        D = spec.degree
        for r, value in modes.items():
            if len(r) != spec.dim or any(abs(rj) > D for rj in r):
                raise ValueError(f"mode {r} outside the degree-{D} cube")
            idx = tuple(rj + D for rj in r)
            mirror = tuple(D - rj for rj in r)
            c[idx] += value
            if mirror != idx:
                c[mirror] += np.conj(value)
        c = _hermitize(c)
        return cls(spec, c)

    # -- accessors ---------------------------------------------------------

    def coeff(self, r: Iterable[int]) -> complex:
        idx = tuple(int(rj) + self.spec.degree for rj in r)
        return complex(self.coeffs[idx])

    @property
    def lossy(self) -> bool:
        return self.loss > LOSS_FLAG

    # -- arithmetic (exact coefficient operations) --------------------------

    def _require_same_spec(self, other: "FourierScalar") -> None:
        if self.spec != other.spec:
            raise GridMismatchError("operands live on different grids")

    def __add__(self, other: "FourierScalar") -> "FourierScalar":
        self._require_same_spec(other)
        return FourierScalar(
            self.spec, self.coeffs + other.coeffs, max(self.loss, other.loss)
        )

    def __sub__(self, other: "FourierScalar") -> "FourierScalar":
        self._require_same_spec(other)
        return FourierScalar(
            self.spec, self.coeffs - other.coeffs, max(self.loss, other.loss)
        )

    def __neg__(self) -> "FourierScalar":
        return FourierScalar(self.spec, -self.coeffs, self.loss)

    def __mul__(self, other):
        if isinstance(other, FourierScalar):
            return multiply(self, other)
        return FourierScalar(self.spec, self.coeffs * float(other), self.loss)

    __rmul__ = __mul__


def cosine(spec: GridSpec, r: tuple[int, ...], amplitude: float = 1.0) -> FourierScalar:
    """amplitude * cos(2*pi*r.x)."""
    return FourierScalar.from_modes(spec, {tuple(r): amplitude / 2.0})


def sine(spec: GridSpec, r: tuple[int, ...], amplitude: float = 1.0) -> FourierScalar:
    """amplitude * sin(2*pi*r.x)."""
    return FourierScalar.from_modes(spec, {tuple(r): -0.5j * amplitude})


# ---------------------------------------------------------------------------
# grid <-> coefficient transforms
# ---------------------------------------------------------------------------


def _real_from_complex(values: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(values.real))) if values.size else 1.0)
    resid = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if resid > IMAG_ERROR * scale:
        raise ConsistencyError(
            f"{what}: imaginary residue {resid:.3e} exceeds {IMAG_ERROR:.0e} "
            "(Hermitian symmetry broken)"
        )
    return values.real.copy()


def values_on_grid(a: FourierScalar, points_per_axis: int | None = None) -> np.ndarray:
    """Evaluate on the uniform grid; returns a real array of grid shape."""
    spec = a.spec
    M = points_per_axis or spec.points_per_axis
    if M < spec.modes_per_axis:
        raise ValueError("grid cannot resolve the retained band")
    idx = _band_indices(spec.degree, M)
    embedded = np.zeros((M,) * spec.dim, dtype=complex)
    embedded[np.ix_(*([idx] * spec.dim))] = a.coeffs
    vals = np.fft.ifftn(embedded) * M**spec.dim
    return _real_from_complex(vals, "values_on_grid")


def _fit_cube(samples: np.ndarray, spec: GridSpec) -> tuple[np.ndarray, float]:
    """DFT of grid samples, truncated to the retained cube.

    Returns (coefficient cube, relative spilled energy).  The spill is the
    energy of resolved modes outside the cube, measured on the grid.
    """
    M = samples.shape[0]
    full = np.fft.fftn(samples) / M**spec.dim
    idx = _band_indices(spec.degree, M)
    cube = full[np.ix_(*([idx] * spec.dim))].copy()
    total = float(np.sum(np.abs(full) ** 2))
    kept = float(np.sum(np.abs(cube) ** 2))
    loss = 0.0 if total == 0.0 else max(0.0, 1.0 - kept / total)
    return _hermitize(cube), loss


def fit_from_samples(samples: np.ndarray, spec: GridSpec) -> FourierScalar:
    """Fit a degree-D series to real samples on the uniform q*(2D+1) grid.

    Hermitian symmetry is enforced exactly by symmetrization.  Raises
    GridMismatchError when the sample array does not match the grid.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != spec.grid_shape:
        raise GridMismatchError(
            f"sample shape {samples.shape} does not match grid {spec.grid_shape}"
        )
    cube, loss = _fit_cube(samples, spec)
    return FourierScalar(spec, cube, loss)


def evaluate_at(a: FourierScalar, points: np.ndarray) -> np.ndarray:
    """Evaluate at arbitrary points of [0,1)^N by direct mode summation.

    points has shape (P, N) (a single length-N point is promoted); the result
    is the real array of values, shape (P,).
    """
    spec = a.spec
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != spec.dim:
        raise GridMismatchError(f"points must have shape (P, {spec.dim})")
    modes = np.arange(-spec.degree, spec.degree + 1)
    out = np.empty(len(pts), dtype=complex)
    # Factorized contraction: exp(2*pi*i r.x) = prod_j exp(2*pi*i r_j x_j).
    # Peak memory stays at chunk * (2D+1)^(N-1).
    chunk = 8192
    for lo in range(0, len(pts), chunk):
        block = pts[lo : lo + chunk]
        acc = np.broadcast_to(a.coeffs, (len(block),) + spec.coeff_shape)
        for j in range(spec.dim - 1, -1, -1):
            phases = np.exp(2j * np.pi * np.outer(block[:, j], modes))
            acc = np.einsum("p...k,pk->p...", acc, phases)
        out[lo : lo + chunk] = acc
    vals = _real_from_complex(out, "evaluate_at")
    return vals[0] if single else vals


def multiply(a: FourierScalar, b: FourierScalar) -> FourierScalar:
    """Pointwise product, dealiased on the oversampled grid.

    Exact on the retained band whenever deg(a) + deg(b) <= 2D; energy in
    product modes beyond degree D is recorded in the result's loss flag.
    """
    a._require_same_spec(b)
    vals = values_on_grid(a) * values_on_grid(b)
    cube, loss = _fit_cube(vals, a.spec)
    return FourierScalar(a.spec, cube, max(loss, a.loss, b.loss))


def differentiate(a: FourierScalar, axis: int) -> FourierScalar:
    """Partial derivative along a 0-based axis: coeff(r) -> 2*pi*i*r_axis*coeff(r).

    Exact on the truncated space.
    """
    if not 0 <= axis < a.spec.dim:
        raise ValueError(f"axis {axis} out of range for dim {a.spec.dim}")
    r = _mode_vectors(a.spec.dim, a.spec.degree)[axis]
    return FourierScalar(a.spec, 2j * np.pi * r * a.coeffs, a.loss)


def integrate_mean(a: FourierScalar) -> float:
    """Integral over T^N with unit volume, i.e. the 0-mode coefficient."""
    return float(a.coeff((0,) * a.spec.dim).real)


def pointwise_unary(a: FourierScalar, fn: str) -> FourierScalar:
    """Apply exp or ln|.| pointwise on the oversampled grid and refit.

    fn is "exp" or "ln_abs".  For ln_abs the values must stay at least
    EPS_POSITIVE away from zero on the grid; the offending grid point is
    reported otherwise.
    """
    vals = values_on_grid(a)
    if fn == "exp":
        out = np.exp(vals)
    elif fn == "ln_abs":
        mags = np.abs(vals)
        if mags.size and float(mags.min()) < EPS_POSITIVE:
            flat = int(np.argmin(mags))
            idx = np.unravel_index(flat, vals.shape)
            point = tuple(i / a.spec.points_per_axis for i in idx)
            raise DomainError(
                f"ln_abs: |value| = {mags.min():.3e} < {EPS_POSITIVE:.0e} "
                f"at grid point {point}"
            )
        out = np.log(mags)
    else:
        raise ValueError(f"unknown pointwise function {fn!r}")
    cube, loss = _fit_cube(out, a.spec)
    return FourierScalar(a.spec, cube, max(loss, a.loss))


# ---------------------------------------------------------------------------
# norms / comparisons
# ---------------------------------------------------------------------------


def coeff_sup(a: FourierScalar) -> float:
    """Max coefficient magnitude."""
    return float(np.max(np.abs(a.coeffs)))


def coeff_distance(a: FourierScalar, b: FourierScalar) -> float:
    """Sup over modes of the coefficient difference."""
    a._require_same_spec(b)
    return float(np.max(np.abs(a.coeffs - b.coeffs)))


def sup_norm(a: FourierScalar) -> float:
    """Max |a(x)| over the dense evaluation grid."""
    return float(np.max(np.abs(values_on_grid(a))))
