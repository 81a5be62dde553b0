"""Differential forms on the torus with Fourier-coefficient components.

A k-form is a map from strictly increasing multi-indices (j_1 < ... < j_k)
to scalar fields; a 0-form is a single scalar.  The exterior derivative and
the wedge product act on coefficients, so d . d = 0 holds at the level of
coefficient cancellation.

The quotient of 1-forms by exact ones gets a canonical representative: the
differential of the scalar mode exp(2*pi*i*r.x) has coefficient vector
proportional to r, so removing, at every mode r != 0, the component of the
coefficient vector parallel to r projects out exactly the exact forms.
Equality in the quotient becomes plain coefficient equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import EPS_INVERTIBLE
from .errors import DomainError, GridMismatchError
from .spectral import (
    FourierScalar,
    GridSpec,
    _mode_vectors,
    coeff_sup,
    differentiate,
    fit_from_samples,
    multiply,
    values_on_grid,
)

MultiIndex = tuple[int, ...]


def _merge_sign(indices: Sequence[int]) -> tuple[MultiIndex, int]:
    """Sort a multi-index, returning (sorted tuple, permutation sign).

    Sign is 0 when an index repeats.
    """
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return tuple(sorted(idx)), 0
    inversions = sum(
        1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b]
    )
    return tuple(sorted(idx)), -1 if inversions % 2 else 1


@dataclass(frozen=True)
class KForm:
    """Differential k-form with FourierScalar coefficients.

    coeffs maps increasing multi-indices to scalars; absent indices are zero.
    Degree runs from 0 (scalar) to N.
    """

    spec: GridSpec
    degree: int
    coeffs: Mapping[MultiIndex, FourierScalar]

    def __post_init__(self) -> None:
        if not 0 <= self.degree <= self.spec.dim:
            raise ValueError(f"degree {self.degree} outside 0..{self.spec.dim}")
        for idx, a in self.coeffs.items():
            if len(idx) != self.degree or any(
                not 0 <= j < self.spec.dim for j in idx
            ):
                raise ValueError(f"bad multi-index {idx} for degree {self.degree}")
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"multi-index {idx} must be strictly increasing")
            if a.spec != self.spec:
                raise GridMismatchError("component lives on a different grid")

    @classmethod
    def zero(cls, spec: GridSpec, degree: int) -> "KForm":
        return cls(spec, degree, {})

    @classmethod
    def from_scalar(cls, a: FourierScalar) -> "KForm":
        return cls(a.spec, 0, {(): a})

    @classmethod
    def one_form(cls, components: Sequence[FourierScalar]) -> "KForm":
        spec = components[0].spec
        return cls(spec, 1, {(j,): c for j, c in enumerate(components)})

    def component(self, idx: MultiIndex) -> FourierScalar:
        return self.coeffs.get(tuple(idx), FourierScalar.zeros(self.spec))

    def map_components(self, fn: Callable[[FourierScalar], FourierScalar]) -> "KForm":
        return KForm(self.spec, self.degree, {i: fn(a) for i, a in self.coeffs.items()})

    def coeff_sup(self) -> float:
        if not self.coeffs:
            return 0.0
        return max(coeff_sup(a) for a in self.coeffs.values())

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.coeff_sup() <= tol

    def __add__(self, other: "KForm") -> "KForm":
        self._check_compatible(other)
        out = dict(self.coeffs)
        for idx, a in other.coeffs.items():
            out[idx] = out[idx] + a if idx in out else a
        return KForm(self.spec, self.degree, out)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "KForm":
        return self.map_components(lambda a: float(scalar) * a)

    __mul__ = __rmul__

    def __neg__(self) -> "KForm":
        return (-1.0) * self

    def _check_compatible(self, other: "KForm") -> None:
        if self.spec != other.spec:
            raise GridMismatchError("forms live on different grids")
        if self.degree != other.degree:
            raise ValueError("cannot combine forms of different degree")


def form_distance(a: KForm, b: KForm) -> float:
    """Sup over components and modes of the coefficient difference."""
    return (a - b).coeff_sup()


def scalar_times_form(a: FourierScalar, w: KForm) -> KForm:
    """Multiply every component by the scalar field a."""
    return w.map_components(lambda c: multiply(a, c))


def wedge(w: KForm, e: KForm) -> KForm:
    """Exterior product.  Degrees beyond N give the zero top form."""
    if w.spec != e.spec:
        raise GridMismatchError("forms live on different grids")
    N = w.spec.dim
    if w.degree + e.degree > N:
        return KForm.zero(w.spec, N)
    out: dict[MultiIndex, FourierScalar] = {}
    for i1, a in w.coeffs.items():
        for i2, b in e.coeffs.items():
            merged, sign = _merge_sign(i1 + i2)
            if sign == 0:
                continue
            term = multiply(a, b)
            if sign < 0:
                term = -term
            out[merged] = out[merged] + term if merged in out else term
    return KForm(w.spec, w.degree + e.degree, out)


def exterior_d(w: KForm) -> KForm:
    """Exterior derivative, summing over all N coordinate axes.

    A top-degree form maps to the zero top form; d(d(w)) vanishes exactly.
    """
    N = w.spec.dim
    if w.degree >= N:
        return KForm.zero(w.spec, N)
    out: dict[MultiIndex, FourierScalar] = {}
    for idx, a in w.coeffs.items():
        for j in range(N):
            merged, sign = _merge_sign((j,) + idx)
            if sign == 0:
                continue
            term = differentiate(a, j)
            if sign < 0:
                term = -term
            out[merged] = out[merged] + term if merged in out else term
    return KForm(w.spec, w.degree + 1, out)


# ---------------------------------------------------------------------------
# quotient of 1-forms by exact forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneFormClass:
    """Class of a 1-form modulo exact forms, held by its canonical
    representative (mode-r coefficient vector orthogonal to r for r != 0)."""

    rep: KForm

    def __post_init__(self) -> None:
        if self.rep.degree != 1:
            raise ValueError("representative must be a 1-form")

    def __add__(self, other: "OneFormClass") -> "OneFormClass":
        return OneFormClass(self.rep + other.rep)

    def __sub__(self, other: "OneFormClass") -> "OneFormClass":
        return OneFormClass(self.rep - other.rep)

    def __rmul__(self, scalar: float) -> "OneFormClass":
        return OneFormClass(float(scalar) * self.rep)

    __mul__ = __rmul__

    def __neg__(self) -> "OneFormClass":
        return OneFormClass(-self.rep)

    def coeff_sup(self) -> float:
        return self.rep.coeff_sup()

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.rep.is_zero(tol)


def class_distance(a: OneFormClass, b: OneFormClass) -> float:
    return form_distance(a.rep, b.rep)


def one_form_class(w: KForm) -> OneFormClass:
    """Project a 1-form onto the canonical representative of its class.

    At every mode r != 0 the component of the coefficient vector parallel to
    r is removed (it is the differential of a scalar mode); the r = 0
    components are kept.  Idempotent and linear.
    """
    if w.degree != 1:
        raise ValueError("projection defined for 1-forms only")
    spec = w.spec
    N = spec.dim
    stack = np.stack([w.component((j,)).coeffs for j in range(N)], axis=0)
    r = _mode_vectors(N, spec.degree).astype(float)
    rr = np.sum(r * r, axis=0)
    rr_safe = np.where(rr == 0.0, 1.0, rr)
    dot = np.sum(stack * r, axis=0)
    projected = stack - (dot / rr_safe) * r
    zero_mode = rr == 0.0
    projected[:, zero_mode] = stack[:, zero_mode]
    comps = [FourierScalar(spec, projected[j].copy()) for j in range(N)]
    return OneFormClass(KForm.one_form(comps))


# ---------------------------------------------------------------------------
# matrix-valued fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixField:
    """N x N matrix of scalar fields on T^N (values act on tangent vectors)."""

    spec: GridSpec
    entries: tuple[tuple[FourierScalar, ...], ...]

    def __post_init__(self) -> None:
        N = self.spec.dim
        if len(self.entries) != N or any(len(row) != N for row in self.entries):
            raise GridMismatchError("entries must form an N x N array")
        for row in self.entries:
            for a in row:
                if a.spec != self.spec:
                    raise GridMismatchError("entry lives on a different grid")

    @classmethod
    def identity(cls, spec: GridSpec) -> "MatrixField":
        one = FourierScalar.constant(spec, 1.0)
        zero = FourierScalar.zeros(spec)
        return cls(
            spec,
            tuple(
                tuple(one if i == k else zero for k in range(spec.dim))
                for i in range(spec.dim)
            ),
        )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[FourierScalar]]) -> "MatrixField":
        return cls(rows[0][0].spec, tuple(tuple(row) for row in rows))

    def entry(self, i: int, k: int) -> FourierScalar:
        return self.entries[i][k]

    def values(self, points_per_axis: int | None = None) -> np.ndarray:
        """Grid values, shape (*grid, N, N)."""
        N = self.spec.dim
        vals = np.stack(
            [
                np.stack([values_on_grid(self.entries[i][k], points_per_axis)
                          for k in range(N)], axis=-1)
                for i in range(N)
            ],
            axis=-2,
        )
        return vals

    def __add__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField.from_rows(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField.from_rows(
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def coeff_sup(self) -> float:
        return max(coeff_sup(a) for row in self.entries for a in row)


def matmul_fields(m1: MatrixField, m2: MatrixField) -> MatrixField:
    """Pointwise matrix product with dealiased entry products."""
    if m1.spec != m2.spec:
        raise GridMismatchError("matrix fields live on different grids")
    N = m1.spec.dim
    rows = []
    for i in range(N):
        row = []
        for k in range(N):
            acc = multiply(m1.entries[i][0], m2.entries[0][k])
            for j in range(1, N):
                acc = acc + multiply(m1.entries[i][j], m2.entries[j][k])
            row.append(acc)
        rows.append(row)
    return MatrixField.from_rows(rows)


def trace_field(m: MatrixField) -> FourierScalar:
    """Sum of diagonal entries."""
    acc = m.entries[0][0]
    for i in range(1, m.spec.dim):
        acc = acc + m.entries[i][i]
    return acc


def determinant_values(m: MatrixField) -> np.ndarray:
    """det m(x) on the dense grid, shape (*grid,)."""
    return np.linalg.det(m.values())


def matrix_inverse_field(m: MatrixField, eps: float = EPS_INVERTIBLE) -> MatrixField:
    """Pointwise inverse on the oversampled grid, refit entrywise.

    Requires |det m(x)| >= eps on the grid; the offending point and value
    are reported otherwise.
    """
    spec = m.spec
    vals = m.values()
    det = np.linalg.det(vals)
    mags = np.abs(det)
    if float(mags.min()) < eps:
        flat = int(np.argmin(mags))
        idx = np.unravel_index(flat, det.shape)
        point = tuple(i / spec.points_per_axis for i in idx)
        raise DomainError(
            f"matrix field nearly singular: |det| = {mags.min():.3e} at {point}"
        )
    inv = np.linalg.inv(vals)
    N = spec.dim
    rows = [
        [fit_from_samples(inv[..., i, k], spec) for k in range(N)] for i in range(N)
    ]
    return MatrixField.from_rows(rows)


FormMatrix = tuple[tuple[KForm, ...], ...]


def matrix_exterior_d(m: MatrixField) -> FormMatrix:
    """Entrywise exterior derivative: an N x N matrix of 1-forms."""
    N = m.spec.dim
    return tuple(
        tuple(exterior_d(KForm.from_scalar(m.entries[i][k])) for k in range(N))
        for i in range(N)
    )


def mat_times_formmat(m: MatrixField, fm: FormMatrix) -> FormMatrix:
    """(m . fm)_{ik} = sum_j m_{ij} fm_{jk} with scalar-times-form products."""
    N = m.spec.dim
    out = []
    for i in range(N):
        row = []
        for k in range(N):
            acc = scalar_times_form(m.entries[i][0], fm[0][k])
            for j in range(1, N):
                acc = acc + scalar_times_form(m.entries[i][j], fm[j][k])
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def formmat_times_mat(fm: FormMatrix, m: MatrixField) -> FormMatrix:
    """(fm . m)_{ik} = sum_j fm_{ij} m_{jk}."""
    N = m.spec.dim
    out = []
    for i in range(N):
        row = []
        for k in range(N):
            acc = scalar_times_form(m.entries[0][k], fm[i][0])
            for j in range(1, N):
                acc = acc + scalar_times_form(m.entries[j][k], fm[i][j])
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def trace_formmat(fm: FormMatrix) -> KForm:
    """Trace of a matrix of forms: sum of the diagonal."""
    acc = fm[0][0]
    for i in range(1, len(fm)):
        acc = acc + fm[i][i]
    return acc


def matrix_wedge_trace(alpha: FormMatrix, beta: FormMatrix) -> KForm:
    """Tr(alpha ^ beta) = sum_{i,k} alpha_{ik} ^ beta_{ki} for matrices of
    1-forms; the result is a 2-form."""
    N = len(alpha)
    if len(beta) != N or any(len(r) != N for r in alpha) or any(
        len(r) != N for r in beta
    ):
        raise GridMismatchError("form matrices must be conformable N x N arrays")
    spec = alpha[0][0].spec
    acc = KForm.zero(spec, 2 if spec.dim >= 2 else spec.dim)
    for i in range(N):
        for k in range(N):
            acc = acc + wedge(alpha[i][k], beta[k][i])
    return acc


def trace_scalarmat_formmat(m: MatrixField, fm: FormMatrix) -> KForm:
    """Tr(m . fm) = sum_{i,k} m_{ik} fm_{ki}; result degree equals fm's."""
    spec = m.spec
    N = spec.dim
    acc = KForm.zero(spec, fm[0][0].degree)
    for i in range(N):
        for k in range(N):
            acc = acc + scalar_times_form(m.entries[i][k], fm[k][i])
    return acc
