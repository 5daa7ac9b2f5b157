"""Shared fixtures-by-function for the test modules."""

import numpy as np

from moser_lab.cohomology import (
    Cochain,
    adjoint_representation,
    pullback_adjoint,
    pullback_quotient,
    quotient_adjoint,
    quotient_frame,
)
from moser_lab.groups import GroupElement, _flat, catalog, translation, translation_coords
from scipy.linalg import expm


def ideal_matrices(G):
    """Spanning matrices of an Ad-invariant subspace of g (possibly zero)."""
    fam = G.family
    if fam in ("torus", "translation"):
        return [G.algebra_basis[0]]
    if fam == "heisenberg":
        return [G.algebra_basis[2]]
    if fam == "gl":
        return [np.eye(G.ambient_dim)]
    if fam == "so" and G.param == 4:
        E = {}
        for i in range(4):
            for j in range(i + 1, 4):
                b = np.zeros((4, 4))
                b[j, i], b[i, j] = 1.0, -1.0
                E[i, j] = b
        return [E[0, 1] + E[2, 3], E[0, 2] - E[1, 3], E[0, 3] + E[1, 2]]
    if fam == "product":
        return [G.algebra_basis[0]]
    return []


def one_parameter(G, v):
    """t -> exp(t v) as a homomorphism TranslationGroup(1) -> G."""
    V = G.coords_to_matrix(v)

    def hom(h):
        return GroupElement(expm(translation_coords(h)[0] * V), G)

    return hom


def representations(G, rng):
    """One representation of each kind, paired with the group it acts on."""
    R1 = translation(1)
    v = rng.uniform(-1, 1, G.dim)
    hom = one_parameter(G, v)
    return {
        "Adjoint": (G, adjoint_representation(G)),
        "PullbackAdjoint": (R1, pullback_adjoint(R1, G, hom)),
        "QuotientAdjoint": (G, quotient_adjoint(G, quotient_frame(G, ideal_matrices(G)))),
        "PullbackQuotient": (R1, pullback_quotient(R1, G, hom, quotient_frame(G, [G.coords_to_matrix(v)]))),
    }


def polynomial_cochain(rep, degree, rng):
    """A random polynomial evaluator of degree <= 2 in the matrix entries of its arguments."""
    d = rep.group.ambient_dim
    width = 2 * d * d if rep.group.is_complex else d * d
    A = rng.normal(size=(degree, rep.space_dim, width))
    B = rng.normal(size=(degree, rep.space_dim, width)) * 0.3
    c0 = rng.normal(size=rep.space_dim)

    def ev(*g):
        out = c0.copy()
        for k, x in enumerate(g):
            f = _flat(x.matrix)
            out = out + A[k] @ f + B[k] @ (f * f)
        return out

    return Cochain(degree, rep, ev)


def sample_radius(G):
    return None if G.is_compact else 0.8


GROUPS = catalog()
