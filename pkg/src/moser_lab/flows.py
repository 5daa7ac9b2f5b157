"""Time-dependent flows on matrix groups: RK4 with a retraction after every step."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .groups import GroupDescriptor, GroupElement, RetractionError


class FlowDiverged(ArithmeticError):
    def __init__(self, eps: float, residual: float):
        self.eps = eps
        self.residual = residual
        super().__init__(f"flow left the retraction basin at eps={eps:.6g} (residual {residual:.3e})")


def rk4_flow(field: Callable[[float, np.ndarray], np.ndarray], x0: GroupElement,
             times: Sequence[float]) -> list[GroupElement]:
    """Integrate dx/deps = field(eps, x) through ``times`` (monotone, any direction).

    Each RK4 step is followed by ``descriptor.project``; leaving the
    retraction basin raises :class:`FlowDiverged` at the failing time.
    """
    desc = x0.descriptor
    x = x0.matrix
    out = [x0]
    for t0, t1 in zip(times[:-1], times[1:]):
        h = t1 - t0
        k1 = field(t0, x)
        k2 = field(t0 + h / 2, x + h / 2 * k1)
        k3 = field(t0 + h / 2, x + h / 2 * k2)
        k4 = field(t1, x + h * k3)
        y = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        try:
            g = desc.project(y)
        except RetractionError as exc:
            raise FlowDiverged(t1, exc.residual) from exc
        x = g.matrix
        out.append(g)
    return out


def right_invariant_flow(velocity: Callable[[float], np.ndarray], descriptor: GroupDescriptor,
                         times: Sequence[float], start: GroupElement | None = None) -> list[GroupElement]:
    """Integral curve of the right-invariant field x -> velocity(eps) x."""
    x0 = start if start is not None else descriptor.identity()
    return rk4_flow(lambda t, x: velocity(t) @ x, x0, times)


def interpolant(grid: np.ndarray, values: np.ndarray, kind: str = "cubic") -> Callable[[float], np.ndarray]:
    """Interpolate per-node coordinate vectors along the epsilon grid."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if kind == "cubic" and len(grid) >= 4:
        spline = CubicSpline(grid, values, axis=0)
        return lambda t: spline(t)
    return lambda t: np.array([np.interp(t, grid, values[:, j]) for j in range(values.shape[1])])


def fd_weights(x0: float, nodes: Sequence[float], order: int = 1) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at x0 (Fornberg's recursion)."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def stencil(n: int, index: int, width: int = 5) -> list[int]:
    """Indices of the ``width`` grid nodes nearest ``index`` (shifted inward at the ends)."""
    width = min(width, n)
    start = min(max(index - width // 2, 0), n - width)
    return list(range(start, start + width))
