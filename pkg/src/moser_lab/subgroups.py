"""Deformations of embedded Lie subgroups.

A deformation is a family of embeddings iota_eps: (H, m_eps) -> G.  The
quotient g/h_eps is realized as the Frobenius-orthogonal complement of
h_eps = d(iota_eps)(h), with a frame that varies continuously in eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cohomology import (
    Cochain,
    QuotientFrame,
    cocycle_defect,
    pullback_adjoint,
    pullback_quotient,
    quotient_frame,
)
from .config import FD_STEP, PipelineConfig, Tolerances
from .flows import FlowDiverged, interpolant, rk4_flow
from .groups import (
    GroupDescriptor,
    GroupElement,
    UnsupportedGroupError,
    adjoint_matrix,
    conjugate,
    exp,
    group_distance,
    inverse,
)
from .haar import HaarQuadrature, haar_quadrature
from .homomorphisms import (
    InvalidDeformationError,
    Transgression,
    TransgressionPath,
    TrivialityCertificate,
    eps_derivative,
    eps_grid,
    finish_certificate,
)


class InconsistentTransgressionError(ArithmeticError):
    """The complement part of X - delta(u) does not vanish, so u does not transgress the quotient class."""


@dataclass(frozen=True, eq=False)
class SubgroupDeformation:
    """A family of embeddings iota_eps of (H, m_eps) into G.

    ``mult`` defaults to the matrix product of ``inner``.  When it varies with
    eps, ``haar_transport(eps, nodes)`` must map a node stack of the fixed Haar
    quadrature to nodes of a Haar quadrature for m_eps.
    """

    inner: GroupDescriptor
    target: GroupDescriptor
    iota: Callable[[float, GroupElement], GroupElement]
    mult: Callable[[float, GroupElement, GroupElement], GroupElement] | None = None
    d_eps_iota: Callable[[float, GroupElement], np.ndarray] | None = None
    eps_domain: tuple[float, float] = (-1.0, 1.0)
    haar_transport: Callable[[float, np.ndarray], np.ndarray] | None = None
    name: str = ""

    def multiply(self, eps: float, a: GroupElement, b: GroupElement) -> GroupElement:
        if self.mult is None:
            return a @ b
        return self.mult(eps, a, b)

    def mult_at(self, eps: float):
        if self.mult is None:
            return None
        return lambda a, b: self.mult(eps, a, b)

    def embedding(self, eps: float) -> Callable[[GroupElement], GroupElement]:
        return lambda h: self.iota(eps, h)


def embedding_defect(s: SubgroupDeformation, eps: float, pairs: Sequence[Sequence[GroupElement]]) -> float:
    """Homomorphism defect of iota_eps on (H, m_eps), plus identity and associativity of m_eps."""
    one = s.inner.identity()
    worst = group_distance(s.iota(eps, one), s.target.identity())
    for a, b in pairs:
        ab = s.multiply(eps, a, b)
        worst = max(worst, group_distance(s.iota(eps, ab), s.iota(eps, a) @ s.iota(eps, b)))
        worst = max(worst, group_distance(s.multiply(eps, a, one), a), group_distance(s.multiply(eps, one, a), a))
        lhs = s.multiply(eps, ab, a)
        rhs = s.multiply(eps, a, s.multiply(eps, b, a))
        worst = max(worst, group_distance(lhs, rhs))
    return worst


def subalgebra_basis(s: SubgroupDeformation, lam: float, fd_step: float = FD_STEP,
                     previous: QuotientFrame | None = None) -> QuotientFrame:
    """Frame for h_lam = d(iota_lam)(h) and its orthogonal complement in g."""
    images = []
    for e in s.inner.algebra_basis:
        plus = exp(s.inner.vector_from_matrix(fd_step * e))
        minus = exp(s.inner.vector_from_matrix(-fd_step * e))
        images.append((s.iota(lam, plus).matrix - s.iota(lam, minus).matrix) / (2 * fd_step))
    try:
        return quotient_frame(s.target, images, lam, previous)
    except ValueError as exc:
        raise InvalidDeformationError(f"iota_{lam:g} does not have injective differential: {exc}") from exc


def subgroup_velocity(s: SubgroupDeformation, lam: float, h: GroupElement, fd_step: float = FD_STEP,
                      use_analytic: bool = True, richardson: bool = False) -> np.ndarray:
    """X_lam(h) = (d/deps iota_eps(h)) iota_lam(h)^-1 as a matrix in g (not projected)."""
    if use_analytic and s.d_eps_iota is not None:
        V = np.asarray(s.d_eps_iota(lam, h))
    else:
        V = eps_derivative(lambda e: s.iota(e, h).matrix, lam, s.eps_domain, fd_step, richardson)
    return V @ inverse(s.iota(lam, h)).matrix


def full_cocycle(s: SubgroupDeformation, lam: float, fd_step: float = FD_STEP, use_analytic: bool = True) -> Cochain:
    """The un-projected X_lam as a g-valued cochain on (H, m_lam)."""
    rep = pullback_adjoint(s.inner, s.target, s.embedding(lam), s.mult_at(lam))
    return Cochain(1, rep, lambda h: s.target.project_coords(subgroup_velocity(s, lam, h, fd_step, use_analytic))[0])


def subgroup_cocycle(s: SubgroupDeformation, lam: float, frame: QuotientFrame | None = None,
                     fd_step: float = FD_STEP, use_analytic: bool = True) -> Cochain:
    """X_lam mod h_lam in complement coordinates, with the quotient representation of (H, m_lam)."""
    frame = frame or subalgebra_basis(s, lam, fd_step)
    rep = pullback_quotient(s.inner, s.target, s.embedding(lam), frame, s.mult_at(lam))
    return Cochain(1, rep, lambda h: frame.project_matrix(subgroup_velocity(s, lam, h, fd_step, use_analytic)))


def verify_subgroup_cocycle(s: SubgroupDeformation, lam: float, samples: Sequence[Sequence[GroupElement]],
                            **kwargs) -> float:
    return cocycle_defect(subgroup_cocycle(s, lam, **kwargs), samples)


def quotient_residual(Xbar: Cochain, u: np.ndarray, samples: Sequence[GroupElement]) -> float:
    """max_h |Xbar(h) - (Ad u - u) mod h|."""
    frame = Xbar.rep.frame
    hom = Xbar.rep.hom
    target = Xbar.rep.target
    um = target.coords_to_matrix(u)
    worst = 0.0
    for h in samples:
        g = hom(h)
        du = frame.project_matrix(g.matrix @ um @ inverse(g).matrix - um)
        worst = max(worst, float(np.linalg.norm(Xbar(h) - du)))
    return worst


def haar_for(s: SubgroupDeformation, lam: float, q: HaarQuadrature) -> HaarQuadrature:
    if s.haar_transport is None:
        return q
    return q.transported(s.haar_transport(lam, q.matrices))


def transgress_subgroup_haar(s: SubgroupDeformation, lam: float, q: HaarQuadrature,
                             samples: Sequence[GroupElement] | None = None, *,
                             tol: float = Tolerances().transgression_tol, frame: QuotientFrame | None = None,
                             fd_step: float = FD_STEP, use_analytic: bool = True) -> Transgression:
    """u_lam = -(Haar average of the full X_lam); the residual is measured in g/h_lam."""
    if not s.inner.is_compact:
        raise UnsupportedGroupError(f"Haar transgression needs a compact subgroup, got {s.inner.name}")
    frame = frame or subalgebra_basis(s, lam, fd_step)
    X = full_cocycle(s, lam, fd_step, use_analytic)
    u = -haar_for(s, lam, q).integrate(X)
    if samples is None:
        samples = [s.inner.random_element(np.random.default_rng(0)) for _ in range(8)]
    residual = quotient_residual(subgroup_cocycle(s, lam, frame, fd_step, use_analytic), u, samples)
    vec = s.target.vector(u)
    return Transgression(vec if residual <= tol else None, residual, "Haar", vec)


def transgress_subgroup_least_squares(s: SubgroupDeformation, lam: float, samples: Sequence[GroupElement], *,
                                      tol: float = Tolerances().transgression_tol,
                                      frame: QuotientFrame | None = None, fd_step: float = FD_STEP,
                                      use_analytic: bool = True) -> Transgression:
    """Least-squares u in g with (Ad u - u) mod h matching Xbar on the samples."""
    frame = frame or subalgebra_basis(s, lam, fd_step)
    Xbar = subgroup_cocycle(s, lam, frame, fd_step, use_analytic)
    P = np.stack([frame.project_matrix(b) for b in s.target.algebra_basis], axis=1)
    dim = s.target.dim
    blocks = [P @ (adjoint_matrix(s.iota(lam, h)) - np.eye(dim)) for h in samples]
    rhs = [Xbar(h) for h in samples]
    if frame.dim == 0:
        vec = s.target.zero_vector()
        return Transgression(vec, 0.0, "LeastSquares", vec)
    u, _, rank, _ = np.linalg.lstsq(np.vstack(blocks), np.concatenate(rhs), rcond=None)
    residual = max(float(np.linalg.norm(A @ u - b)) for A, b in zip(blocks, rhs))
    vec = s.target.vector(u)
    return Transgression(vec if residual <= tol else None, residual, "LeastSquares", vec, rank < dim)


def correction_residual(s: SubgroupDeformation, lam: float, u: np.ndarray, h: GroupElement,
                        frame: QuotientFrame, fd_step: float = FD_STEP,
                        use_analytic: bool = True) -> tuple[np.ndarray, float]:
    """Y_lam(h) in inner-algebra coordinates and the complement norm of X - delta(u) at h."""
    g = s.iota(lam, h)
    um = s.target.coords_to_matrix(u)
    W = subgroup_velocity(s, lam, h, fd_step, use_analytic) - g.matrix @ um @ inverse(g).matrix + um
    return -frame.image_coords(W), float(np.linalg.norm(frame.project_matrix(W)))


def correction_field(s: SubgroupDeformation, lam: float, u, frame: QuotientFrame | None = None, *,
                     tol: float = Tolerances().transgression_tol, fd_step: float = FD_STEP,
                     use_analytic: bool = True) -> Callable[[GroupElement], np.ndarray]:
    """h -> Y_lam(h) with X_lam(h) - Ad u + u = -d(iota_lam)(Y_lam(h))."""
    frame = frame or subalgebra_basis(s, lam, fd_step)
    coords = np.asarray(getattr(u, "coords", u), dtype=float)

    def Y(h: GroupElement) -> np.ndarray:
        y, comp = correction_residual(s, lam, coords, h, frame, fd_step, use_analytic)
        if comp > tol:
            raise InconsistentTransgressionError(f"complement component {comp:.3e} at eps={lam:g}")
        return y

    return Y


def right_translate(s: SubgroupDeformation, eps: float, x: GroupElement, Y: np.ndarray,
                    fd_step: float = FD_STEP) -> np.ndarray:
    """dR^eps_x(Y) for Y in the inner algebra (matrix), using m_eps."""
    if s.mult is None:
        return Y @ x.matrix
    plus = exp(s.inner.vector_from_matrix(fd_step * Y, tol=None))
    minus = exp(s.inner.vector_from_matrix(-fd_step * Y, tol=None))
    return (s.mult(eps, plus, x).matrix - s.mult(eps, minus, x).matrix) / (2 * fd_step)


def h_flow(s: SubgroupDeformation, path: TransgressionPath, points: Sequence[GroupElement],
           config: PipelineConfig | None = None) -> list[list[GroupElement]]:
    """F_eps(h) on the path grid for each point: the flow of x -> dR^eps_x(Y_eps(x)) from the identity map.

    Returns one list per point.  Raises FlowDiverged if a point leaves the
    retraction basin or the complement consistency check fails mid-flow.
    """
    config = config or PipelineConfig()
    u_of = interpolant(path.eps_grid, path.coords, config.interpolation)
    frames: dict[float, QuotientFrame] = {}
    tol = config.tolerances.transgression_tol
    inner = s.inner

    def frame_at(t: float) -> QuotientFrame:
        if t not in frames:
            frames[t] = subalgebra_basis(s, t, config.fd_step)
        return frames[t]

    def field(t: float, x: np.ndarray) -> np.ndarray:
        xe = GroupElement(x, inner)
        y, comp = correction_residual(s, t, u_of(t), xe, frame_at(t), config.fd_step, config.use_analytic)
        if comp > tol:
            raise InconsistentTransgressionError(f"complement component {comp:.3e} at eps={t:g}")
        return right_translate(s, t, xe, inner.coords_to_matrix(y), config.fd_step)

    times = list(path.eps_grid)
    out = []
    for p in points:
        try:
            out.append(rk4_flow(field, p, times))
        except InconsistentTransgressionError as exc:
            raise FlowDiverged(float("nan"), float("inf")) from exc
    return out


def isomorphism_defect(s: SubgroupDeformation, path: TransgressionPath, pairs: Sequence[Sequence[GroupElement]],
                       config: PipelineConfig | None = None) -> np.ndarray:
    """Per-eps max over pairs of |F_eps(h1 h2) - m_eps(F_eps(h1), F_eps(h2))|."""
    config = config or PipelineConfig()
    firsts = [a for a, _ in pairs]
    seconds = [b for _, b in pairs]
    prods = [a @ b for a, b in pairs]
    fa, fb, fab = (h_flow(s, path, pts, config) for pts in (firsts, seconds, prods))
    out = np.zeros(len(path.eps_grid))
    for i, eps in enumerate(path.eps_grid):
        out[i] = max(group_distance(fab[j][i], s.multiply(eps, fa[j][i], fb[j][i])) for j in range(len(pairs)))
    return out


def certify_subgroup_trivial(s: SubgroupDeformation, config: PipelineConfig | None = None,
                             samples: Sequence[GroupElement] | None = None) -> TrivialityCertificate:
    """Quotient transgression -> H-flow F_eps -> Moser flow g_eps -> check iota_eps o F_eps = I_g o iota."""
    config = config or PipelineConfig()
    tols = config.tolerances
    lo, hi = s.eps_domain
    if not (lo <= 0.0 and config.eps_max <= hi):
        raise InvalidDeformationError(f"[0, {config.eps_max}] not inside eps domain {s.eps_domain}")
    rng = np.random.default_rng(config.seed)
    radius = None if s.inner.is_compact else config.sample_radius
    samples = list(samples) if samples is not None else [s.inner.random_element(rng, radius)
                                                        for _ in range(config.sample_count)]
    pairs = list(zip(samples[::2], samples[1::2]))
    grid = eps_grid(config)
    for eps in (grid[0], grid[len(grid) // 2], grid[-1]):
        defect = embedding_defect(s, eps, pairs)
        if defect > tols.hom_tol:
            raise InvalidDeformationError(f"iota_{eps:g} is not an embedding homomorphism (defect {defect:.3e})")

    quad = haar_quadrature(s.inner, config.resolution) if s.inner.is_compact else None
    frame = None
    values, residuals, defects, conds = [], [], [], []
    for eps in grid:
        frame = subalgebra_basis(s, eps, config.fd_step, previous=frame)
        conds.append(frame.condition_number())
        Xbar = subgroup_cocycle(s, eps, frame, config.fd_step, config.use_analytic)
        defects.append(cocycle_defect(Xbar, pairs))
        if quad is not None:
            tr = transgress_subgroup_haar(s, eps, quad, samples, tol=tols.transgression_tol, frame=frame,
                                          fd_step=config.fd_step, use_analytic=config.use_analytic)
        else:
            tr = transgress_subgroup_least_squares(s, eps, samples, tol=tols.transgression_tol, frame=frame,
                                                   fd_step=config.fd_step, use_analytic=config.use_analytic)
        values.append(tr.candidate)
        residuals.append(tr.residual)
    residuals = np.array(residuals)
    path = TransgressionPath(grid, values, "Haar" if quad is not None else "LeastSquares", residuals)

    trans_ok = residuals <= tols.transgression_tol
    n_ok = len(grid) if trans_ok.all() else int(np.flatnonzero(~trans_ok)[0])
    flows: list[list[GroupElement]] = [[h] for h in samples]
    flow_stop = None
    if n_ok >= 2:
        prefix = TransgressionPath(grid[:n_ok], values[:n_ok], path.method, residuals[:n_ok])
        try:
            flows = h_flow(s, prefix, samples, config)
        except FlowDiverged:
            flow_stop = 1
    base = [s.iota(0.0, h) for h in samples]

    def conj_fn(g_path):
        out = []
        for i, g in enumerate(g_path):
            out.append(max(group_distance(s.iota(grid[i], f[i]), conjugate(g, b)) for f, b in zip(flows, base)))
        return np.array(out)

    extras = {"frame_condition": np.array(conds)}
    return finish_certificate(path, np.array(defects), tols, config, conj_fn, extras, flow_stop)
