"""Diffeomorphisms of the torus and vector-field calculus.

A diffeomorphism is stored as F(x) = A.x + f(x) mod 1 with an integer
winding matrix A (det A = +-1, identity by default) and a periodic
displacement f given by N scalar fields.  Periodicity of the map is
automatic in this representation; being a diffeomorphism is certified
numerically: det(A + f^J(x)) must keep a constant sign and magnitude
>= EPS_REGULAR on the dense grid.

Composition, inversion and group actions evaluate on the oversampled grid
and refit, so they are exact only up to the retained band; the regularity
certificate is re-checked after every such construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EPS_REGULAR, FLOW_STEPS, NEWTON_MAX_ITER, NEWTON_TOL
from .errors import ConvergenceError, GridMismatchError, RegularityError
from .geometry import KForm, MatrixField, scalar_times_form, trace_field, wedge
from .spectral import (
    FourierScalar,
    GridSpec,
    differentiate,
    evaluate_at,
    fit_from_samples,
    multiply,
    values_on_grid,
)


def _check_winding(spec: GridSpec, winding: np.ndarray) -> np.ndarray:
    w = np.asarray(winding)
    if w.shape != (spec.dim, spec.dim):
        raise GridMismatchError("winding matrix has the wrong shape")
    if not np.issubdtype(w.dtype, np.integer):
        rounded = np.rint(w).astype(int)
        if np.max(np.abs(w - rounded)) > 1e-9:
            raise ValueError("winding matrix must be integer")
        w = rounded
    det = round(float(np.linalg.det(w)))
    if det not in (-1, 1):
        raise ValueError(f"winding matrix must have det +-1, got {det}")
    return w.astype(int)


@dataclass(frozen=True)
class Diffeo:
    """Torus diffeomorphism F(x) = winding . x + displacement(x) mod 1."""

    spec: GridSpec
    winding: np.ndarray
    displacement: tuple[FourierScalar, ...]

    def __post_init__(self) -> None:
        w = _check_winding(self.spec, self.winding)
        object.__setattr__(self, "winding", w)
        w.setflags(write=False)
        if len(self.displacement) != self.spec.dim:
            raise GridMismatchError("need one displacement field per dimension")
        for f in self.displacement:
            if f.spec != self.spec:
                raise GridMismatchError("displacement lives on a different grid")
        det = np.linalg.det(jacobian(self).values())
        det_min = float(np.min(np.abs(det)))
        same_sign = float(det.max()) * float(det.min()) > 0.0
        if not same_sign or det_min < EPS_REGULAR:
            raise RegularityError(
                f"jacobian determinant not bounded away from zero "
                f"(min |det| = {det_min:.3e}); map is not certified regular"
            )
        object.__setattr__(self, "_det_min", det_min)
        object.__setattr__(self, "_orientation", 1 if float(det.max()) > 0 else -1)

    # -- constructors --------------------------------------------------------

    @classmethod
    def identity(cls, spec: GridSpec) -> "Diffeo":
        return cls(
            spec,
            np.eye(spec.dim, dtype=int),
            tuple(FourierScalar.zeros(spec) for _ in range(spec.dim)),
        )

    @classmethod
    def translation(cls, spec: GridSpec, offset) -> "Diffeo":
        return cls(
            spec,
            np.eye(spec.dim, dtype=int),
            tuple(FourierScalar.constant(spec, float(c)) for c in offset),
        )

    @classmethod
    def from_displacement(
        cls, displacement, winding: np.ndarray | None = None
    ) -> "Diffeo":
        spec = displacement[0].spec
        w = np.eye(spec.dim, dtype=int) if winding is None else winding
        return cls(spec, w, tuple(displacement))

    # -- evaluation ----------------------------------------------------------

    @property
    def orientation(self) -> int:
        return self._orientation  # type: ignore[attr-defined]

    @property
    def det_min(self) -> float:
        return self._det_min  # type: ignore[attr-defined]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """F at arbitrary points, shape (P, N) -> (P, N), not reduced mod 1."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lin = pts @ self.winding.T.astype(float)
        disp = np.stack(
            [evaluate_at(f, pts) for f in self.displacement], axis=-1
        )
        return lin + disp

    def grid_values(self) -> np.ndarray:
        """F at the dense grid points, shape (P, N) with P = M^N."""
        pts = self.spec.grid_points()
        lin = pts @ self.winding.T.astype(float)
        disp = np.stack(
            [values_on_grid(f).ravel() for f in self.displacement], axis=-1
        )
        return lin + disp


@dataclass(frozen=True)
class VectorField:
    """Vector field v = sum_j v_j(x) d/dx_j."""

    spec: GridSpec
    components: tuple[FourierScalar, ...]

    def __post_init__(self) -> None:
        if len(self.components) != self.spec.dim:
            raise GridMismatchError("need one component per dimension")
        for c in self.components:
            if c.spec != self.spec:
                raise GridMismatchError("component lives on a different grid")

    @classmethod
    def from_components(cls, components) -> "VectorField":
        return cls(components[0].spec, tuple(components))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(
            self.spec,
            tuple(a + b for a, b in zip(self.components, other.components)),
        )

    def __rmul__(self, scalar: float) -> "VectorField":
        return VectorField(
            self.spec, tuple(float(scalar) * c for c in self.components)
        )

    __mul__ = __rmul__

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([evaluate_at(c, pts) for c in self.components], axis=-1)


# ---------------------------------------------------------------------------
# jacobians
# ---------------------------------------------------------------------------


def jacobian(F: Diffeo) -> MatrixField:
    """Matrix of partials (i,k) -> A_ik + d f_i / d x_k; exact on the band."""
    spec = F.spec
    rows = []
    for i in range(spec.dim):
        row = []
        for k in range(spec.dim):
            entry = differentiate(F.displacement[i], k)
            a_ik = float(F.winding[i, k])
            if a_ik != 0.0:
                entry = entry + FourierScalar.constant(spec, a_ik)
            row.append(entry)
        rows.append(row)
    return MatrixField.from_rows(rows)


def vector_jacobian(v: VectorField) -> MatrixField:
    """Matrix of partials (i,k) -> d v_i / d x_k."""
    return MatrixField.from_rows(
        [
            [differentiate(v.components[i], k) for k in range(v.spec.dim)]
            for i in range(v.spec.dim)
        ]
    )


def jacobian_determinant(F: Diffeo) -> FourierScalar:
    """det F^J fitted from its dense-grid values."""
    return fit_from_samples(np.linalg.det(jacobian(F).values()), F.spec)


# ---------------------------------------------------------------------------
# group structure
# ---------------------------------------------------------------------------


def compose(F: Diffeo, G: Diffeo) -> Diffeo:
    """(F o G)(x) = F(G(x)); displacement refit on the oversampled grid.

    Raises RegularityError when the result fails its certificate (the
    composition left the representable regime).
    """
    if F.spec != G.spec:
        raise GridMismatchError("diffeomorphisms live on different grids")
    spec = F.spec
    gx = G.grid_values()  # (P, N)
    f_at_gx = np.stack(
        [evaluate_at(f, gx) for f in F.displacement], axis=-1
    )  # (P, N)
    g_disp = np.stack(
        [values_on_grid(g).ravel() for g in G.displacement], axis=-1
    )
    disp = g_disp @ F.winding.T.astype(float) + f_at_gx
    shape = spec.grid_shape
    displacement = tuple(
        fit_from_samples(disp[:, i].reshape(shape), spec) for i in range(spec.dim)
    )
    return Diffeo(spec, F.winding @ G.winding, displacement)


def inverse(F: Diffeo) -> Diffeo:
    """Pointwise Newton solve of F(z) = y on the grid, refit as a Diffeo."""
    spec = F.spec
    a_inv = np.rint(np.linalg.inv(F.winding)).astype(int)
    if not np.array_equal(F.winding @ a_inv, np.eye(spec.dim, dtype=int)):
        raise ValueError("winding matrix is not invertible over the integers")
    y = spec.grid_points()  # (P, N)
    z = y @ a_inv.T.astype(float)
    dcoeffs = [
        [differentiate(F.displacement[i], k) for k in range(spec.dim)]
        for i in range(spec.dim)
    ]
    a_float = F.winding.astype(float)
    for _ in range(NEWTON_MAX_ITER):
        f_at_z = np.stack([evaluate_at(f, z) for f in F.displacement], axis=-1)
        resid = z @ a_float.T + f_at_z - y
        err = float(np.max(np.abs(resid)))
        if err < NEWTON_TOL:
            break
        jac = np.empty((len(z), spec.dim, spec.dim))
        for i in range(spec.dim):
            for k in range(spec.dim):
                jac[:, i, k] = a_float[i, k] + evaluate_at(dcoeffs[i][k], z)
        z = z - np.linalg.solve(jac, resid[..., None])[..., 0]
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge within {NEWTON_MAX_ITER} steps"
        )
    g = z - y @ a_inv.T.astype(float)
    shape = spec.grid_shape
    displacement = tuple(
        fit_from_samples(g[:, i].reshape(shape), spec) for i in range(spec.dim)
    )
    return Diffeo(spec, a_inv, displacement)


# ---------------------------------------------------------------------------
# actions on fields and forms
# ---------------------------------------------------------------------------


def act_on_scalar(a: FourierScalar, F: Diffeo) -> FourierScalar:
    """Right action a -> a o F, refit on the grid."""
    vals = evaluate_at(a, F.grid_values())
    return fit_from_samples(vals.reshape(F.spec.grid_shape), F.spec)


def act_on_matrix(m: MatrixField, F: Diffeo) -> MatrixField:
    """Entrywise right action m -> m o F."""
    return MatrixField.from_rows(
        [[act_on_scalar(entry, F) for entry in row] for row in m.entries]
    )


def pullback_form(w: KForm, F: Diffeo) -> KForm:
    """Right action on k-forms: coefficients compose with F and each dx_j
    becomes dF_j, the exact differential of the j-th coordinate of F."""
    spec = w.spec
    if w.degree == 0:
        return KForm.from_scalar(act_on_scalar(w.component(()), F))
    jac = jacobian(F)
    d_rows = [
        KForm.one_form([jac.entries[j][k] for k in range(spec.dim)])
        for j in range(spec.dim)
    ]
    out = KForm.zero(spec, w.degree)
    for idx, a in w.coeffs.items():
        basis = d_rows[idx[0]]
        for j in idx[1:]:
            basis = wedge(basis, d_rows[j])
        out = out + scalar_times_form(act_on_scalar(a, F), basis)
    return out


# ---------------------------------------------------------------------------
# Lie algebra
# ---------------------------------------------------------------------------


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """[v, w]_i = sum_j (v_j dw_i/dx_j - w_j dv_i/dx_j)."""
    if v.spec != w.spec:
        raise GridMismatchError("vector fields live on different grids")
    comps = []
    for i in range(v.spec.dim):
        acc = FourierScalar.zeros(v.spec)
        for j in range(v.spec.dim):
            acc = acc + multiply(v.components[j], differentiate(w.components[i], j))
            acc = acc - multiply(w.components[j], differentiate(v.components[i], j))
        comps.append(acc)
    return VectorField(v.spec, tuple(comps))


def divergence(v: VectorField) -> FourierScalar:
    """Trace of the vector-field jacobian."""
    return trace_field(vector_jacobian(v))


def directional_derivative(v: VectorField, a: FourierScalar) -> FourierScalar:
    """v . a = sum_j v_j da/dx_j."""
    acc = FourierScalar.zeros(v.spec)
    for j in range(v.spec.dim):
        acc = acc + multiply(v.components[j], differentiate(a, j))
    return acc


def _replace_slot_sign(idx: tuple[int, ...], slot: int, l: int):
    """Index set and sign for dx_{j1}^..^dx_l(slot)^..^dx_{jk}."""
    written = list(idx)
    written[slot] = l
    if len(set(written)) != len(written):
        return None, 0
    inversions = sum(
        1
        for a in range(len(written))
        for b in range(a + 1, len(written))
        if written[a] > written[b]
    )
    return tuple(sorted(written)), -1 if inversions % 2 else 1


def lie_derivative(v: VectorField, w: KForm) -> KForm:
    """(v.a) dx_I plus the terms where one dx_{j_r} becomes dv_{j_r}."""
    if v.spec != w.spec:
        raise GridMismatchError("operands live on different grids")
    spec = w.spec
    out: dict[tuple[int, ...], FourierScalar] = {}

    def add(idx, scalar):
        out[idx] = out[idx] + scalar if idx in out else scalar

    for idx, a in w.coeffs.items():
        add(idx, directional_derivative(v, a))
        for slot, jr in enumerate(idx):
            for l in range(spec.dim):
                merged, sign = _replace_slot_sign(idx, slot, l)
                if sign == 0:
                    continue
                term = multiply(a, differentiate(v.components[jr], l))
                add(merged, term if sign > 0 else -term)
    return KForm(spec, w.degree, out)


def flow(v: VectorField, t: float, steps: int = FLOW_STEPS) -> Diffeo:
    """Time-t flow of v by fixed-step RK4 from every grid point.

    The result has identity winding; a RegularityError suggests a smaller t.
    """
    spec = v.spec
    x = spec.grid_points()
    h = t / steps
    z = x.copy()
    for _ in range(steps):
        k1 = v.values(z)
        k2 = v.values(z + 0.5 * h * k1)
        k3 = v.values(z + 0.5 * h * k2)
        k4 = v.values(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    disp = z - x
    shape = spec.grid_shape
    displacement = tuple(
        fit_from_samples(disp[:, i].reshape(shape), spec) for i in range(spec.dim)
    )
    try:
        return Diffeo(spec, np.eye(spec.dim, dtype=int), displacement)
    except RegularityError as exc:
        raise RegularityError(
            f"flow left the regular regime at t = {t}; use a smaller time"
        ) from exc
