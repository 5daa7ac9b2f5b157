"""Built-in deformation scenarios with known answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .cohomology import Cochain, adjoint_representation, coboundary, constant_cochain
from .groups import (
    GroupElement,
    conjugate,
    exp,
    hat,
    heisenberg3,
    so,
    so3,
    su2,
    torus,
    translation,
    translation_coords,
)
from .homomorphisms import HomDeformation, Verdict, inner_family
from .subgroups import SubgroupDeformation

HOMOMORPHISM = "Homomorphism"
SUBGROUP = "Subgroup"
WEAK = "WeakTriviality"
KINDS = (HOMOMORPHISM, SUBGROUP, WEAK)


@dataclass(frozen=True)
class Scenario:
    """A catalog entry.

    ``build()`` returns a HomDeformation or SubgroupDeformation; weak-triviality
    scenarios return ``(deformation, Z_path, u_path)``.  ``defaults`` are
    PipelineConfig overrides applied before the user's own.
    """

    id: str
    kind: str
    expected: Verdict
    exercises: str
    build: Callable[[], object]
    defaults: dict = field(default_factory=dict)


def circle_angle(h: GroupElement) -> float:
    m = np.real(h.matrix)
    return float(np.arctan2(m[1, 0], m[0, 0]))


def _su2_circle(h: GroupElement) -> GroupElement:
    t = circle_angle(h)
    return su2().element(np.diag([np.exp(1j * t), np.exp(-1j * t)]), check=False)


def _z_rotation(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _so3_circle(h: GroupElement) -> GroupElement:
    return GroupElement(_z_rotation(circle_angle(h)), so3())


LX, LY, LZ = hat([1, 0, 0]), hat([0, 1, 0]), hat([0, 0, 1])


def constant_hom() -> HomDeformation:
    return HomDeformation(torus(1), su2(), lambda eps, h: _su2_circle(h),
                          lambda eps, h: np.zeros((2, 2), dtype=complex), (-1.0, 1.0), "constant_hom")


def circle_in_su2_conjugated() -> HomDeformation:
    G = su2()
    A = G.algebra_basis[0]
    return inner_family(_su2_circle, lambda e: GroupElement(expm(e * A), G), torus(1), G,
                        d_path=lambda e: A @ expm(e * A), name="circle_in_su2_conjugated")


def circle_in_so3_curved() -> HomDeformation:
    G = so3()

    def path(e):
        return GroupElement(expm(e * LX) @ expm(e * e * LY), G)

    def d_path(e):
        return LX @ expm(e * LX) @ expm(e * e * LY) + 2 * e * expm(e * LX) @ LY @ expm(e * e * LY)

    return inner_family(_so3_circle, path, torus(1), G, d_path, name="circle_in_so3_curved")


def shear_line_r1_to_r2() -> HomDeformation:
    R2 = translation(2)

    def ev(eps, h):
        t = translation_coords(h)[0]
        m = np.eye(3)
        m[:2, 2] = (t, eps * t)
        return GroupElement(m, R2)

    def d_eps(eps, h):
        m = np.zeros((3, 3))
        m[1, 2] = translation_coords(h)[0]
        return m

    return HomDeformation(translation(1), R2, ev, d_eps, (-1.0, 1.0), "shear_line_r1_to_r2")


def heisenberg_inner() -> HomDeformation:
    G = heisenberg3()
    E01, E12 = G.algebra_basis[0], G.algebra_basis[1]

    def phi(h):
        return GroupElement(expm(translation_coords(h)[0] * E01), G)

    return inner_family(phi, lambda e: GroupElement(expm(e * E12), G), translation(1), G,
                        d_path=lambda e: E12 @ expm(e * E12), name="heisenberg_inner")


def _tilted_inclusion(h: GroupElement, eps: float, angle: float) -> np.ndarray:
    g = expm(eps * LX)
    return g @ _z_rotation(angle) @ g.T


def so2_in_so3_tilt() -> SubgroupDeformation:
    G = so3()

    def iota(eps, h):
        return GroupElement(_tilted_inclusion(h, eps, circle_angle(h)), G)

    def d_iota(eps, h):
        p = _tilted_inclusion(h, eps, circle_angle(h))
        return LX @ p - p @ LX

    return SubgroupDeformation(so(2), G, iota, None, d_iota, (-1.0, 1.0), name="so2_in_so3_tilt")


def _isotopy(eps: float, t):
    return t + eps * np.sin(t)


def _isotopy_inverse(eps: float, s):
    s = np.asarray(s, dtype=float)
    t = s.copy()
    for _ in range(50):
        step = (_isotopy(eps, t) - s) / (1 + eps * np.cos(t))
        t = t - step
        if np.all(np.abs(step) < 1e-15):
            break
    return t


def _circle_matrices(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def so2_in_so3_isotopy() -> SubgroupDeformation:
    """SO(2) with the multiplication pulled back through t -> t + eps sin t, tilted inside SO(3)."""
    H, G = so(2), so3()

    def mult(eps, a, b):
        s = _isotopy(eps, circle_angle(a)) + _isotopy(eps, circle_angle(b))
        return GroupElement(_circle_matrices(_isotopy_inverse(eps, np.angle(np.exp(1j * s)))), H)

    def iota(eps, h):
        return GroupElement(_tilted_inclusion(h, eps, _isotopy(eps, circle_angle(h))), G)

    def d_iota(eps, h):
        t = circle_angle(h)
        p = _tilted_inclusion(h, eps, _isotopy(eps, t))
        g = expm(eps * LX)
        return LX @ p - p @ LX + np.sin(t) * (g @ LZ @ g.T) @ p

    def transport(eps, mats):
        t = np.arctan2(mats[:, 1, 0], mats[:, 0, 0])
        return _circle_matrices(_isotopy_inverse(eps, t))

    return SubgroupDeformation(H, G, iota, mult, d_iota, (-0.9, 0.9), transport, "so2_in_so3_isotopy")


def line_rotation_in_r2() -> SubgroupDeformation:
    R2 = translation(2)

    def iota(eps, h):
        t = translation_coords(h)[0]
        m = np.eye(3)
        m[:2, 2] = t * np.cos(eps), t * np.sin(eps)
        return GroupElement(m, R2)

    def d_iota(eps, h):
        t = translation_coords(h)[0]
        m = np.zeros((3, 3))
        m[:2, 2] = -t * np.sin(eps), t * np.cos(eps)
        return m

    return SubgroupDeformation(translation(1), R2, iota, None, d_iota, (-1.0, 1.0), name="line_rotation_in_r2")


WEAK_GENERATOR = np.array([0.3, -0.2, 0.5])


def weak_pair(scale: float = 1.0):
    """phi_eps = F_eps o phi with F_eps(x) = exp(-eps v) x exp(eps v), and the pre-image Z = scale * delta(v)."""
    G = so3()
    v = G.vector(WEAK_GENERATOR)
    Z = coboundary(constant_cochain(adjoint_representation(G), scale * v.coords))

    def ev(eps, h):
        return conjugate(exp(v * -eps), _so3_circle(h))

    def d_eps(eps, h):
        x = ev(eps, h).matrix
        return x @ v.matrix - v.matrix @ x

    d = HomDeformation(torus(1), G, ev, d_eps, (-1.0, 1.0), "weak_trivial_inner")

    def Z_path(eps) -> Cochain:
        return Z

    def u_path(eps):
        return G.zero_vector()

    return d, Z_path, u_path


def weak_trivial_inner():
    return weak_pair(1.0)


CATALOG: tuple[Scenario, ...] = (
    Scenario("constant_hom", HOMOMORPHISM, Verdict.TRIVIALLY_CERTIFIED,
             "a constant family has zero deformation cocycle", constant_hom),
    Scenario("circle_in_su2_conjugated", HOMOMORPHISM, Verdict.TRIVIALLY_CERTIFIED,
             "compact source: Haar averaging transgresses the cocycle, so the family is conjugate to phi_0",
             circle_in_su2_conjugated, {"resolution": 64}),
    Scenario("circle_in_so3_curved", HOMOMORPHISM, Verdict.TRIVIALLY_CERTIFIED,
             "a smooth transgression integrates to a conjugating path along a curved generator",
             circle_in_so3_curved),
    Scenario("shear_line_r1_to_r2", HOMOMORPHISM, Verdict.NOT_TRANSGRESSIBLE,
             "abelian target: coboundaries vanish, so a nonzero cocycle cannot be transgressed",
             shear_line_r1_to_r2),
    Scenario("heisenberg_inner", HOMOMORPHISM, Verdict.TRIVIALLY_CERTIFIED,
             "non-compact source: least-squares transgression of an inner family",
             heisenberg_inner),
    Scenario("so2_in_so3_tilt", SUBGROUP, Verdict.TRIVIALLY_CERTIFIED,
             "compact subgroup: the quotient cocycle is transgressed by Haar averaging",
             so2_in_so3_tilt, {"resolution": 64}),
    Scenario("so2_in_so3_isotopy", SUBGROUP, Verdict.TRIVIALLY_CERTIFIED,
             "varying multiplication on H with a transported Haar system",
             so2_in_so3_isotopy, {"resolution": 64}),
    Scenario("line_rotation_in_r2", SUBGROUP, Verdict.NOT_TRANSGRESSIBLE,
             "rotating lines in R^2 form a nontrivial family of subgroups",
             line_rotation_in_r2),
    Scenario("weak_trivial_inner", WEAK, Verdict.TRIVIALLY_CERTIFIED,
             "a pre-image X = phi^*Z + delta(u) reduces weak triviality to ordinary triviality",
             weak_trivial_inner, {"eps_steps": 20}),
)


def get(scenario_id: str) -> Scenario:
    for s in CATALOG:
        if s.id == scenario_id:
            return s
    raise KeyError(f"unknown scenario {scenario_id!r}")


def list_scenarios() -> list[dict]:
    return [{"id": s.id, "kind": s.kind, "expected": str(s.expected), "exercises": s.exercises} for s in CATALOG]
