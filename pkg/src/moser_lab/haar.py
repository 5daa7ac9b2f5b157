"""Normalized left-invariant Haar quadrature on the compact catalog groups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .groups import (
    GroupDescriptor,
    GroupElement,
    UnsupportedGroupError,
    _block_diag,
)

DEFAULT_RESOLUTION = 32


@dataclass(frozen=True, eq=False)
class HaarQuadrature:
    """Weighted node set approximating the normalized Haar measure.

    ``matrices`` has shape (N, d, d); weights sum to one.
    """

    descriptor: GroupDescriptor
    matrices: np.ndarray
    weights: np.ndarray
    resolution: int

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def nodes(self) -> list[GroupElement]:
        return [GroupElement(m, self.descriptor) for m in self.matrices]

    def integrate(self, f: Callable[[GroupElement], object]) -> np.ndarray:
        """Sum w_i f(node_i) in node order."""
        values = np.array([np.asarray(f(GroupElement(m, self.descriptor))) for m in self.matrices])
        return np.tensordot(self.weights, values, axes=1)

    def integrate_batch(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Like :meth:`integrate` for an ``f`` that maps the (N, d, d) node stack to (N, ...) values."""
        return np.tensordot(self.weights, np.asarray(f(self.matrices)), axes=1)

    def transported(self, matrices: np.ndarray) -> HaarQuadrature:
        """Same weights on new nodes (pushforward through a diffeomorphism)."""
        return HaarQuadrature(self.descriptor, np.asarray(matrices), self.weights, self.resolution)


def _gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _circle_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2 * np.pi * np.arange(n) / n
    c, s = np.cos(theta), np.sin(theta)
    mats = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return mats, np.full(n, 1.0 / n)


def _su2_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product Gauss-Legendre rule in hyperspherical angles on S^3."""
    psi, wpsi = _gauss_legendre(n, 0.0, np.pi)
    theta, wtheta = _gauss_legendre(n, 0.0, np.pi)
    phi, wphi = _gauss_legendre(n, 0.0, 2 * np.pi)
    P, T, F = np.meshgrid(psi, theta, phi, indexing="ij")
    W = (wpsi * np.sin(psi) ** 2)[:, None, None] * (wtheta * np.sin(theta))[None, :, None] * wphi[None, None, :]
    x0 = np.cos(P)
    x1 = np.sin(P) * np.cos(T)
    x2 = np.sin(P) * np.sin(T) * np.cos(F)
    x3 = np.sin(P) * np.sin(T) * np.sin(F)
    q = np.stack([x0, x1, x2, x3], -1).reshape(-1, 4)
    w = W.ravel()
    return _su2_from_quaternions(q), w / np.sum(w)


def _su2_from_quaternions(q: np.ndarray) -> np.ndarray:
    a = q[:, 0] + 1j * q[:, 1]
    b = q[:, 2] + 1j * q[:, 3]
    return np.stack([np.stack([a, b], -1), np.stack([-b.conj(), a.conj()], -1)], -2)


def su2_to_so3(u: np.ndarray) -> np.ndarray:
    """Double cover SU(2) -> SO(3) through unit quaternions; accepts one matrix or a stack."""
    u = np.asarray(u)
    single = u.ndim == 2
    if single:
        u = u[None]
    a, b = u[:, 0, 0], u[:, 0, 1]
    w, x, y, z = a.real, -a.imag, -b.imag, -b.real
    # quaternion (w, x, y, z) -> rotation matrix
    r = np.empty((len(u), 3, 3))
    r[:, 0, 0] = 1 - 2 * (y * y + z * z)
    r[:, 0, 1] = 2 * (x * y - z * w)
    r[:, 0, 2] = 2 * (x * z + y * w)
    r[:, 1, 0] = 2 * (x * y + z * w)
    r[:, 1, 1] = 1 - 2 * (x * x + z * z)
    r[:, 1, 2] = 2 * (y * z - x * w)
    r[:, 2, 0] = 2 * (x * z - y * w)
    r[:, 2, 1] = 2 * (y * z + x * w)
    r[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return r[0] if single else r


def _rule(desc: GroupDescriptor, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    fam = desc.family
    if fam == "torus":
        mats, w = _circle_rule(resolution)
        for _ in range(desc.param - 1):
            mats, w = _tensor((mats, w), _circle_rule(resolution))
        return mats, w
    if fam == "su2":
        return _su2_rule(resolution)
    if fam == "so" and desc.param == 2:
        return _circle_rule(resolution)
    if fam == "so" and desc.param == 3:
        mats, w = _su2_rule(resolution)
        return su2_to_so3(mats), w
    if fam == "product" and desc.is_compact:
        rule = _rule(desc.factors[0], resolution)
        for f in desc.factors[1:]:
            rule = _tensor(rule, _rule(f, resolution))
        return rule
    raise UnsupportedGroupError(f"no Haar quadrature for {desc.name}")


def _tensor(a: tuple[np.ndarray, np.ndarray], b: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    ma, wa = a
    mb, wb = b
    mats = np.array([_block_diag([x, y]) for x in ma for y in mb])
    return mats, np.outer(wa, wb).ravel()


def haar_quadrature(descriptor: GroupDescriptor, resolution: int = DEFAULT_RESOLUTION) -> HaarQuadrature:
    """Quadrature for the normalized Haar measure of a compact catalog group.

    Torus(n) uses the uniform product grid; SU2 a product Gauss-Legendre rule
    in hyperspherical angles with density sin^2(psi) sin(theta), so it has
    ``resolution**3`` nodes; SO3 pushes the SU2 rule through the double cover.
    """
    if not descriptor.is_compact:
        raise UnsupportedGroupError(f"{descriptor.name} is not compact")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    mats, w = _rule(descriptor, resolution)
    w = np.asarray(w, dtype=float)
    w = w / w.sum()
    mats = np.asarray(mats, dtype=descriptor.dtype)
    mats.setflags(write=False)
    w.setflags(write=False)
    return HaarQuadrature(descriptor, mats, w, resolution)
