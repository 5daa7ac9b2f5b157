"""Differentiable group cochains, the coboundary operator and the representations used with it.

Cochains are evaluators, not tables: a degree-k cochain is any callable
taking k group elements and returning a coordinate vector in the
representation space.  All cocycle checks are therefore sample based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .groups import (
    GroupDescriptor,
    GroupElement,
    _flat,
    adjoint_matrix,
    conjugate,
    multiply,
)

Hom = Callable[[GroupElement], GroupElement]
Mult = Callable[[GroupElement, GroupElement], GroupElement]

ADJOINT = "Adjoint"
PULLBACK_ADJOINT = "PullbackAdjoint"
QUOTIENT_ADJOINT = "QuotientAdjoint"
PULLBACK_QUOTIENT = "PullbackQuotient"


@dataclass(frozen=True, eq=False)
class QuotientFrame:
    """Orthonormal splitting g = h (+) h^perp realizing the quotient g/h.

    ``images`` keeps the raw (non-orthonormalized) spanning matrices of h so
    that h-components can be pulled back to the coordinates they came from.
    """

    algebra: GroupDescriptor
    sub_basis: tuple[np.ndarray, ...]
    comp_basis: tuple[np.ndarray, ...]
    eps: float = 0.0
    images: tuple[np.ndarray, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.comp_basis)

    def project_matrix(self, m: np.ndarray) -> np.ndarray:
        f = _flat(m)
        return np.array([f @ _flat(c) for c in self.comp_basis])

    def project(self, coords: np.ndarray) -> np.ndarray:
        return self.project_matrix(self.algebra.coords_to_matrix(coords))

    def lift(self, comp_coords: np.ndarray) -> np.ndarray:
        if not self.comp_basis:
            return np.zeros((self.algebra.ambient_dim,) * 2, dtype=self.algebra.dtype)
        return np.tensordot(np.asarray(comp_coords, dtype=float), np.stack(self.comp_basis), axes=1)

    def sub_component(self, m: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``m`` onto h, as a matrix."""
        f = _flat(m)
        out = np.zeros_like(np.asarray(m, dtype=self.algebra.dtype))
        for b in self.sub_basis:
            out = out + (f @ _flat(b)) * b
        return out

    @property
    def _image_columns(self) -> np.ndarray:
        return np.stack([_flat(b) for b in self.images], axis=1)

    def image_coords(self, m: np.ndarray) -> np.ndarray:
        """Coefficients c with sum c_i images_i closest to ``m``."""
        c, *_ = np.linalg.lstsq(self._image_columns, _flat(m), rcond=None)
        return c

    def condition_number(self) -> float:
        if not self.images:
            return 1.0
        return float(np.linalg.cond(self._image_columns))


def _gram_schmidt(candidates: Sequence[np.ndarray], against: Sequence[np.ndarray], tol: float = 1e-8):
    out: list[np.ndarray] = []
    for m in candidates:
        v = np.array(m, copy=True)
        for _ in range(2):
            for b in list(against) + out:
                v = v - float(_flat(b) @ _flat(v)) * b
        n = np.linalg.norm(v)
        if n > tol:
            out.append(v / n)
    return out


def quotient_frame(algebra: GroupDescriptor, sub_matrices: Sequence[np.ndarray], eps: float = 0.0,
                   previous: QuotientFrame | None = None) -> QuotientFrame:
    """Build the splitting from spanning matrices of the subalgebra.

    When ``previous`` is given each basis vector's sign is chosen to keep a
    positive inner product with its predecessor, so frames vary continuously
    along an epsilon grid.
    """
    dtype = algebra.dtype
    images = tuple(np.asarray(m, dtype=dtype) for m in sub_matrices)
    sub = _gram_schmidt(images, [])
    if len(sub) != len(images):
        raise ValueError("subalgebra spanning set is rank deficient")
    comp = _gram_schmidt(algebra.algebra_basis, sub)
    if len(sub) + len(comp) != algebra.dim:
        raise ValueError("could not complete the subalgebra basis to a basis of g")
    if previous is not None:
        sub = [_align(b, p) for b, p in zip(sub, previous.sub_basis)]
        comp = [_align(b, p) for b, p in zip(comp, previous.comp_basis)]
    return QuotientFrame(algebra, tuple(sub), tuple(comp), eps, images)


def _align(b: np.ndarray, prev: np.ndarray) -> np.ndarray:
    return -b if float(_flat(b) @ _flat(prev)) < 0 else b


@dataclass(frozen=True, eq=False)
class Representation:
    """A representation of ``group`` on R^space_dim.

    ``mult`` is the group law used by the coboundary; it differs from matrix
    multiplication only for deformed groups H_eps.
    """

    group: GroupDescriptor
    space_dim: int
    apply: Callable[[GroupElement, np.ndarray], np.ndarray]
    kind: str
    basis_labels: tuple[str, ...] = ()
    mult: Mult = multiply
    hom: Hom | None = None
    target: GroupDescriptor | None = None
    frame: QuotientFrame | None = None

    def matrix(self, g: GroupElement) -> np.ndarray:
        return np.stack([self.apply(g, e) for e in np.eye(self.space_dim)], axis=1)


def _labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def adjoint_representation(group: GroupDescriptor) -> Representation:
    def apply(g, v):
        return adjoint_matrix(g) @ np.asarray(v, dtype=float)

    return Representation(group, group.dim, apply, ADJOINT, _labels("e", group.dim), target=group,
                          hom=lambda g: g)


def pullback_adjoint(source: GroupDescriptor, target: GroupDescriptor, hom: Hom,
                     mult: Mult | None = None) -> Representation:
    """Ad o hom, a representation of ``source`` on the algebra of ``target``."""

    def apply(h, v):
        return adjoint_matrix(hom(h)) @ np.asarray(v, dtype=float)

    return Representation(source, target.dim, apply, PULLBACK_ADJOINT, _labels("e", target.dim),
                          mult=mult or multiply, hom=hom, target=target)


def quotient_adjoint(group: GroupDescriptor, frame: QuotientFrame) -> Representation:
    """Action of ``group`` on g/h; h must be Ad-invariant under ``group``."""
    return pullback_quotient(group, frame.algebra, lambda g: GroupElement(g.matrix, frame.algebra), frame,
                             kind=QUOTIENT_ADJOINT)


def pullback_quotient(source: GroupDescriptor, target: GroupDescriptor, hom: Hom, frame: QuotientFrame,
                      mult: Mult | None = None, kind: str = PULLBACK_QUOTIENT) -> Representation:
    """Action of ``source`` on g/h through ``hom``: lift, apply Ad, project."""

    def apply(h, v):
        g = hom(h)
        ginv = np.linalg.inv(g.matrix)
        return frame.project_matrix(g.matrix @ frame.lift(v) @ ginv)

    return Representation(source, frame.dim, apply, kind, _labels("q", frame.dim), mult=mult or multiply,
                          hom=hom, target=target, frame=frame)


def pullback_representation(rep: Representation, hom: Hom, source: GroupDescriptor,
                            mult: Mult | None = None) -> Representation:
    """rep o hom as a representation of ``source``."""
    inner = rep.hom or (lambda g: g)

    def composed(h):
        return inner(hom(h))

    if rep.kind in (ADJOINT, PULLBACK_ADJOINT):
        return pullback_adjoint(source, rep.target, composed, mult)
    if rep.kind in (QUOTIENT_ADJOINT, PULLBACK_QUOTIENT):
        return pullback_quotient(source, rep.target, composed, rep.frame, mult)

    def apply(h, v):
        return rep.apply(hom(h), v)

    return Representation(source, rep.space_dim, apply, f"Pullback({rep.kind})", rep.basis_labels,
                          mult=mult or multiply, hom=composed, target=rep.target)


@dataclass(frozen=True, eq=False)
class Cochain:
    degree: int
    rep: Representation
    eval: Callable[..., np.ndarray]

    def __call__(self, *elements: GroupElement) -> np.ndarray:
        if len(elements) != self.degree:
            raise TypeError(f"degree-{self.degree} cochain called with {len(elements)} arguments")
        return np.asarray(self.eval(*elements), dtype=float)


def constant_cochain(rep: Representation, v) -> Cochain:
    """A 0-cochain, i.e. a vector of the representation space."""
    value = np.asarray(v, dtype=float).reshape(rep.space_dim)
    return Cochain(0, rep, lambda: value)


def zero_cochain(rep: Representation, degree: int) -> Cochain:
    z = np.zeros(rep.space_dim)
    return Cochain(degree, rep, lambda *g: z)


def coboundary(c: Cochain) -> Cochain:
    """delta c(g1..g_{k+1}) = rho(g1) c(g2..) + sum_i (-1)^i c(.., g_i g_{i+1}, ..) + (-1)^{k+1} c(g1..g_k)."""
    k, rep = c.degree, c.rep

    def d(*g: GroupElement) -> np.ndarray:
        out = rep.apply(g[0], c(*g[1:]))
        for i in range(1, k + 1):
            merged = g[:i - 1] + (rep.mult(g[i - 1], g[i]),) + g[i + 1:]
            out = out + (-1) ** i * c(*merged)
        return out + (-1) ** (k + 1) * c(*g[:k])

    return Cochain(k + 1, rep, d)


def cocycle_defect(c: Cochain, samples: Sequence[Sequence[GroupElement]]) -> float:
    """Largest Euclidean norm of delta c over the sample tuples."""
    if not samples:
        raise ValueError("cocycle_defect needs at least one sample tuple")
    dc = coboundary(c)
    return max(float(np.linalg.norm(dc(*t))) for t in samples)


def pullback_cochain(c: Cochain, hom: Hom, source: GroupDescriptor, mult: Mult | None = None) -> Cochain:
    """(hom^* c)(h1..hk) = c(hom(h1)..hom(hk)), with the pulled-back representation."""
    rep = pullback_representation(c.rep, hom, source, mult)
    return Cochain(c.degree, rep, lambda *h: c(*(hom(x) for x in h)))


def pushforward_class(g: GroupElement, c: Cochain) -> Cochain:
    """Ad_g o c, a cochain for the conjugated homomorphism I_g o phi."""
    rep = c.rep
    if rep.kind not in (ADJOINT, PULLBACK_ADJOINT) or rep.hom is None:
        raise ValueError("pushforward needs a cochain valued in g with a (pullback) adjoint representation")
    phi = rep.hom
    ad = adjoint_matrix(g)
    new_rep = pullback_adjoint(rep.group, rep.target, lambda h: conjugate(g, phi(h)), rep.mult)
    return Cochain(c.degree, new_rep, lambda *h: ad @ c(*h))


def sample_tuples(group: GroupDescriptor, k: int, n: int, rng: np.random.Generator,
                  radius: float | None = None) -> list[tuple[GroupElement, ...]]:
    return [tuple(group.random_element(rng, radius) for _ in range(k)) for _ in range(n)]
