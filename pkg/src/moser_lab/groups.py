"""Concrete matrix Lie groups and calculus on them.

Every group in the catalog is realized as a closed subgroup of some GL(d),
so translations, Ad and the exponential all reduce to matrix algebra.  The
Lie algebra is a real subspace of d x d matrices with a fixed basis;
coordinates are taken with respect to that basis using the Frobenius inner
product <a, b> = Re tr(a^H b).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

GROUP_MEMBERSHIP_TOL = 1e-9
LOG_ROUNDTRIP_TOL = 1e-9
ALGEBRA_TANGENCY_TOL = 1e-6
LOG_RADIUS = 1.0
RETRACTION_BASIN = 0.5


class LieError(Exception):
    """Base class for errors raised by the group layer."""


class DescriptorMismatch(LieError, ValueError):
    pass


class SingularElementError(LieError, ValueError):
    pass


class LogDomainError(LieError, ValueError):
    """Raised when log is asked for an element outside the injectivity ball."""


class NotTangentError(LieError, ValueError):
    pass


class UnsupportedGroupError(LieError, NotImplementedError):
    pass


class RetractionError(LieError, ArithmeticError):
    """A matrix drifted outside the retraction basin; the ODE step must shrink."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"membership residual {residual:.3e} outside retraction basin")


# structural families, used for dispatch
_TORUS = "torus"
_SU2 = "su2"
_SO = "so"
_GL = "gl"
_HEIS = "heisenberg"
_TRANS = "translation"
_PRODUCT = "product"


def _flat(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        return np.concatenate([m.real.ravel(), m.imag.ravel()])
    return m.ravel().astype(float)


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.vdot(a, b)))


def _block_diag(mats: Sequence[np.ndarray]) -> np.ndarray:
    complex_ = any(np.iscomplexobj(m) for m in mats)
    return scipy.linalg.block_diag(*[np.asarray(m, dtype=complex if complex_ else float) for m in mats])


class GroupDescriptor:
    """A matrix Lie group from the catalog.

    Use the module-level constructors (:func:`torus`, :func:`su2`, ...) rather
    than instantiating this directly.
    """

    def __init__(self, name: str, family: str, ambient_dim: int, algebra_basis: Sequence[np.ndarray],
                 is_compact: bool, is_complex: bool = False, factors: Sequence[GroupDescriptor] = (),
                 param: int = 0):
        self.name = name
        self.family = family
        self.ambient_dim = ambient_dim
        self.algebra_basis = tuple(np.array(b, dtype=complex if is_complex else float) for b in algebra_basis)
        self.is_compact = is_compact
        self.is_complex = is_complex
        self.factors = tuple(factors)
        self.param = param
        for b in self.algebra_basis:
            b.setflags(write=False)
        gram = self._basis_columns.T @ self._basis_columns
        if np.linalg.cond(gram) > 1e12:
            raise ValueError(f"algebra basis of {name} is not linearly independent")
        self._coord_solver = np.linalg.solve(gram, self._basis_columns.T)

    def __repr__(self) -> str:
        return f"GroupDescriptor({self.name})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupDescriptor) and other.name == self.name

    def __hash__(self) -> int:
        return hash(self.name)

    @property
    def dim(self) -> int:
        return len(self.algebra_basis)

    @property
    def dtype(self):
        return complex if self.is_complex else float

    @cached_property
    def _basis_columns(self) -> np.ndarray:
        return np.stack([_flat(b) for b in self.algebra_basis], axis=1)

    @cached_property
    def _basis_stack(self) -> np.ndarray:
        return np.stack(self.algebra_basis)

    @cached_property
    def _block_slices(self) -> list[slice]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.ambient_dim))
            start += f.ambient_dim
        return out

    # -- elements and vectors --------------------------------------------

    def identity(self) -> GroupElement:
        return GroupElement(np.eye(self.ambient_dim, dtype=self.dtype), self)

    def element(self, matrix, check: bool = True) -> GroupElement:
        m = np.array(matrix, dtype=self.dtype)
        if m.shape != (self.ambient_dim, self.ambient_dim):
            raise ValueError(f"{self.name} expects {self.ambient_dim}x{self.ambient_dim} matrices, got {m.shape}")
        if check:
            r = self.membership_residual(m)
            if r > GROUP_MEMBERSHIP_TOL:
                raise ValueError(f"matrix is not in {self.name} (residual {r:.3e})")
        return GroupElement(m, self)

    def vector(self, coords) -> AlgebraVector:
        c = np.asarray(coords, dtype=float).reshape(self.dim)
        return AlgebraVector(self.coords_to_matrix(c), c, self)

    def zero_vector(self) -> AlgebraVector:
        return self.vector(np.zeros(self.dim))

    def vector_from_matrix(self, matrix, tol: float | None = ALGEBRA_TANGENCY_TOL) -> AlgebraVector:
        """Express ``matrix`` in basis coordinates, optionally checking it lies in the algebra."""
        m = np.asarray(matrix)
        coords, residual = self.project_coords(m)
        if tol is not None and residual > tol * max(1.0, np.linalg.norm(m)):
            raise NotTangentError(f"matrix is off the {self.name} algebra by {residual:.3e}")
        return AlgebraVector(self.coords_to_matrix(coords), coords, self)

    def coords_to_matrix(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        d = self.ambient_dim
        return (c @ self._basis_stack.reshape(self.dim, d * d)).reshape(c.shape[:-1] + (d, d))

    def project_coords(self, matrix) -> tuple[np.ndarray, float]:
        """Least-squares coordinates of ``matrix`` and the Frobenius residual."""
        f = _flat(np.asarray(matrix, dtype=self.dtype))
        coords = self._coord_solver @ f
        residual = float(np.linalg.norm(f - self._basis_columns @ coords))
        return coords, residual

    # -- structure -----------------------------------------------------------

    def membership_residual(self, m) -> float:
        m = np.asarray(m)
        d = self.ambient_dim
        if m.shape != (d, d):
            return np.inf
        fam = self.family
        if not self.is_complex and np.iscomplexobj(m):
            imag = float(np.linalg.norm(m.imag))
            m = m.real
        else:
            imag = 0.0
        if fam == _TORUS:
            r = 0.0
            mask = np.ones((d, d), dtype=bool)
            for k in range(self.param):
                b = m[2 * k:2 * k + 2, 2 * k:2 * k + 2]
                mask[2 * k:2 * k + 2, 2 * k:2 * k + 2] = False
                r += np.linalg.norm(b.T @ b - np.eye(2)) + abs(np.linalg.det(b) - 1.0)
            return imag + r + float(np.linalg.norm(m[mask]))
        if fam == _SU2:
            return float(np.linalg.norm(m.conj().T @ m - np.eye(2)) + abs(np.linalg.det(m) - 1.0))
        if fam == _SO:
            return imag + float(np.linalg.norm(m.T @ m - np.eye(d)) + abs(np.linalg.det(m) - 1.0))
        if fam == _GL:
            if not np.all(np.isfinite(m)) or abs(np.linalg.det(m)) < 1e-300:
                return np.inf
            return imag
        if fam == _HEIS or fam == _TRANS:
            pattern = self._unipotent_pattern
            return imag + float(np.linalg.norm(m[pattern] - np.eye(d)[pattern]))
        if fam == _PRODUCT:
            r = imag
            mask = np.ones((d, d), dtype=bool)
            for f, s in zip(self.factors, self._block_slices):
                r += f.membership_residual(m[s, s])
                mask[s, s] = False
            return r + float(np.linalg.norm(m[mask]))
        raise UnsupportedGroupError(fam)

    @cached_property
    def _unipotent_pattern(self) -> np.ndarray:
        """Entries that are fixed (0 or 1) for unipotent realizations."""
        d = self.ambient_dim
        free = np.zeros((d, d), dtype=bool)
        for b in self.algebra_basis:
            free |= np.abs(b) > 0
        return ~free

    def project(self, m, basin: float = RETRACTION_BASIN) -> GroupElement:
        """Retract a nearby matrix onto the group (polar factor for compact families)."""
        m = np.asarray(m, dtype=self.dtype)
        r = self.membership_residual(m)
        if not np.isfinite(r) or r >= basin:
            raise RetractionError(r)
        return GroupElement(self._retract(m), self)

    def _retract(self, m: np.ndarray) -> np.ndarray:
        fam = self.family
        if fam == _TORUS:
            out = np.zeros_like(m)
            for k in range(self.param):
                s = slice(2 * k, 2 * k + 2)
                out[s, s] = _polar(m[s, s])
            return out
        if fam == _SO:
            return _polar(m)
        if fam == _SU2:
            u = _polar(m)
            # remove the U(1) phase: principal square root is nearest for det close to 1
            return u / np.sqrt(np.linalg.det(u))
        if fam == _PRODUCT:
            out = np.zeros_like(m)
            for f, s in zip(self.factors, self._block_slices):
                out[s, s] = f._retract(m[s, s])
            return out
        return m.copy()

    # -- sampling --------------------------------------------------------------

    def random_vector(self, rng: np.random.Generator, radius: float = 1.0) -> AlgebraVector:
        return self.vector(rng.uniform(-radius, radius, size=self.dim))

    def random_element(self, rng: np.random.Generator, radius: float | None = None) -> GroupElement:
        """exp of a uniformly random coordinate vector; covers compact groups at radius pi."""
        if radius is None:
            radius = np.pi if self.is_compact else 1.0
        return exp(self.random_vector(rng, radius))


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    descriptor: GroupDescriptor

    def __matmul__(self, other: GroupElement) -> GroupElement:
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"GroupElement({self.descriptor.name}, {np.array2string(self.matrix, precision=4)})"


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    matrix: np.ndarray
    coords: np.ndarray
    descriptor: GroupDescriptor

    def __add__(self, other: AlgebraVector) -> AlgebraVector:
        _same(self.descriptor, other.descriptor)
        return self.descriptor.vector(self.coords + other.coords)

    def __sub__(self, other: AlgebraVector) -> AlgebraVector:
        _same(self.descriptor, other.descriptor)
        return self.descriptor.vector(self.coords - other.coords)

    def __neg__(self) -> AlgebraVector:
        return self.descriptor.vector(-self.coords)

    def __mul__(self, s: float) -> AlgebraVector:
        return self.descriptor.vector(float(s) * self.coords)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def _same(a: GroupDescriptor, b: GroupDescriptor) -> None:
    if a != b:
        raise DescriptorMismatch(f"{a.name} vs {b.name}")


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


# ---------------------------------------------------------------------------
# catalog


def _rot2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def torus(n: int = 1) -> GroupDescriptor:
    """T^n as block-diagonal 2x2 rotations."""
    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    basis = []
    for k in range(n):
        b = np.zeros((2 * n, 2 * n))
        b[2 * k:2 * k + 2, 2 * k:2 * k + 2] = j
        basis.append(b)
    return GroupDescriptor(f"Torus({n})", _TORUS, 2 * n, basis, is_compact=True, param=n)


def torus_element(*angles: float) -> GroupElement:
    return torus(len(angles)).element(_block_diag([_rot2(a) for a in angles]))


def su2() -> GroupDescriptor:
    """SU(2) with algebra basis i*sigma_x, i*sigma_y, i*sigma_z."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return GroupDescriptor("SU2", _SU2, 2, [1j * sx, 1j * sy, 1j * sz], is_compact=True, is_complex=True)


def so3() -> GroupDescriptor:
    """SO(3) with the hat-map basis, so that Ad_R(hat w) = hat(R w)."""
    return GroupDescriptor("SO3", _SO, 3, [hat([1, 0, 0]), hat([0, 1, 0]), hat([0, 0, 1])], is_compact=True,
                           param=3)


def so(n: int) -> GroupDescriptor:
    if n == 3:
        return so3()
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            b = np.zeros((n, n))
            b[j, i], b[i, j] = 1.0, -1.0
            basis.append(b)
    return GroupDescriptor(f"SO({n})", _SO, n, basis, is_compact=True, param=n)


def gl(n: int) -> GroupDescriptor:
    basis = []
    for i in range(n):
        for j in range(n):
            b = np.zeros((n, n))
            b[i, j] = 1.0
            basis.append(b)
    return GroupDescriptor(f"GL({n},R)", _GL, n, basis, is_compact=False, param=n)


def heisenberg3() -> GroupDescriptor:
    """Upper unitriangular 3x3 matrices; basis E01, E12, E02 (the last one central)."""
    basis = []
    for i, j in [(0, 1), (1, 2), (0, 2)]:
        b = np.zeros((3, 3))
        b[i, j] = 1.0
        basis.append(b)
    return GroupDescriptor("Heisenberg3", _HEIS, 3, basis, is_compact=False)


def translation(n: int = 1) -> GroupDescriptor:
    """R^n realized as (n+1)x(n+1) matrices [[I, t], [0, 1]]."""
    basis = []
    for i in range(n):
        b = np.zeros((n + 1, n + 1))
        b[i, n] = 1.0
        basis.append(b)
    return GroupDescriptor(f"TranslationGroup({n})", _TRANS, n + 1, basis, is_compact=False, param=n)


def translation_element(*t: float) -> GroupElement:
    n = len(t)
    m = np.eye(n + 1)
    m[:n, n] = t
    return translation(n).element(m)


def translation_coords(g: GroupElement) -> np.ndarray:
    n = g.descriptor.ambient_dim - 1
    return np.real(g.matrix[:n, n]).copy()


def product(*factors: GroupDescriptor) -> GroupDescriptor:
    if not factors:
        raise ValueError("product of zero groups")
    is_complex = any(f.is_complex for f in factors)
    dims = [f.ambient_dim for f in factors]
    basis = []
    for k, f in enumerate(factors):
        for b in f.algebra_basis:
            blocks = [np.zeros((d, d)) for d in dims]
            blocks[k] = b
            basis.append(_block_diag(blocks))
    name = "ProductGroup(" + ", ".join(f.name for f in factors) + ")"
    return GroupDescriptor(name, _PRODUCT, sum(dims), basis, is_compact=all(f.is_compact for f in factors),
                           is_complex=is_complex, factors=factors)


def product_element(desc: GroupDescriptor, *parts: GroupElement) -> GroupElement:
    return desc.element(_block_diag([p.matrix for p in parts]))


def hat(w) -> np.ndarray:
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation(axis, angle: float) -> GroupElement:
    """Rodrigues rotation in SO3 about a unit ``axis``."""
    k = hat(np.asarray(axis, dtype=float) / np.linalg.norm(axis))
    m = np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
    return so3().element(m)


def catalog() -> list[GroupDescriptor]:
    """One representative of every catalog family."""
    return [torus(1), torus(2), su2(), so3(), so(4), gl(2), heisenberg3(), translation(2),
            product(torus(1), su2())]


# ---------------------------------------------------------------------------
# operations


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    _same(a.descriptor, b.descriptor)
    return GroupElement(a.matrix @ b.matrix, a.descriptor)


def inverse(g: GroupElement) -> GroupElement:
    desc = g.descriptor
    if desc.family in (_TORUS, _SO, _SU2) or (desc.family == _PRODUCT and desc.is_compact):
        return GroupElement(g.matrix.conj().T, desc)
    try:
        inv = np.linalg.inv(g.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularElementError(f"singular matrix in {desc.name}") from exc
    if not np.all(np.isfinite(inv)):
        raise SingularElementError(f"singular matrix in {desc.name}")
    return GroupElement(inv, desc)


def exp(v: AlgebraVector) -> GroupElement:
    return GroupElement(scipy.linalg.expm(v.matrix), v.descriptor)


def log(g: GroupElement, radius: float = LOG_RADIUS) -> AlgebraVector:
    desc = g.descriptor
    dist = np.linalg.norm(g.matrix - np.eye(desc.ambient_dim))
    if dist >= radius:
        raise LogDomainError(f"||g - I|| = {dist:.3f} outside log radius {radius}")
    m = scipy.linalg.logm(g.matrix)
    if not desc.is_complex:
        m = np.real(m)
    v = desc.vector_from_matrix(m, tol=None)
    if np.linalg.norm(scipy.linalg.expm(v.matrix) - g.matrix) > LOG_ROUNDTRIP_TOL:
        raise LogDomainError("log did not round-trip; element off the group or outside the principal branch")
    return v


def adjoint(g: GroupElement, v: AlgebraVector) -> AlgebraVector:
    _same(g.descriptor, v.descriptor)
    m = g.matrix @ v.matrix @ inverse(g).matrix
    return g.descriptor.vector_from_matrix(m)


def adjoint_matrix(g: GroupElement) -> np.ndarray:
    """Matrix of Ad_g in basis coordinates (columns are images of basis vectors)."""
    desc = g.descriptor
    conj = g.matrix @ desc._basis_stack @ inverse(g).matrix
    flat = conj.reshape(desc.dim, -1)
    if desc.is_complex:
        flat = np.concatenate([flat.real, flat.imag], axis=1)
    return desc._coord_solver @ flat.T


def right_translate_to_identity(p: GroupElement, V, tol: float = ALGEBRA_TANGENCY_TOL) -> AlgebraVector:
    """dR_{p^-1}(V) = V p^-1 for a tangent vector V at p."""
    m = np.asarray(V) @ inverse(p).matrix
    return p.descriptor.vector_from_matrix(m, tol=tol)


def project_to_group(m, descriptor: GroupDescriptor) -> GroupElement:
    return descriptor.project(m)


def group_distance(a: GroupElement, b: GroupElement) -> float:
    _same(a.descriptor, b.descriptor)
    return float(np.linalg.norm(a.matrix - b.matrix))


def conjugate(g: GroupElement, x: GroupElement) -> GroupElement:
    """Inner automorphism I_g(x) = g x g^-1."""
    return GroupElement(g.matrix @ x.matrix @ inverse(g).matrix, x.descriptor)
