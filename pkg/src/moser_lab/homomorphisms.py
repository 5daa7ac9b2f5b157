"""Deformations of Lie group homomorphisms and their triviality certificates.

Sign convention: transgressions are stored so that X = delta(u), i.e.
X(h) = Ad_{phi(h)} u - u.  The conjugating path then solves
dg/deps = -u(eps) g with g(0) = 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .cohomology import (
    Cochain,
    coboundary,
    cocycle_defect,
    constant_cochain,
    pullback_adjoint,
)
from .config import FD_STEP, PipelineConfig, Tolerances
from .flows import FlowDiverged, fd_weights, interpolant, right_invariant_flow, rk4_flow, stencil
from .groups import (
    AlgebraVector,
    GroupDescriptor,
    GroupElement,
    UnsupportedGroupError,
    conjugate,
    group_distance,
    inverse,
    right_translate_to_identity,
)
from .haar import HaarQuadrature, haar_quadrature


class InvalidDeformationError(ValueError):
    pass


class Verdict(str, enum.Enum):
    TRIVIALLY_CERTIFIED = "TriviallyCertified"
    NOT_TRANSGRESSIBLE = "NotTransgressible"
    FLOW_DIVERGED = "FlowDiverged"
    PREIMAGE_REJECTED = "PreimageRejected"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class HomDeformation:
    """A smooth family eps -> phi_eps of homomorphisms source -> target.

    ``d_eps`` optionally returns the eps-derivative of ``phi_eps(h)`` as an
    ambient matrix; finite differences are used otherwise.
    """

    source: GroupDescriptor
    target: GroupDescriptor
    eval: Callable[[float, GroupElement], GroupElement]
    d_eps: Callable[[float, GroupElement], np.ndarray] | None = None
    eps_domain: tuple[float, float] = (-1.0, 1.0)
    name: str = ""

    def __call__(self, eps: float, h: GroupElement) -> GroupElement:
        return self.eval(eps, h)

    def at(self, eps: float) -> Callable[[GroupElement], GroupElement]:
        return lambda h: self.eval(eps, h)


def eps_derivative(f: Callable[[float], np.ndarray], lam: float, domain: tuple[float, float],
                   step: float = FD_STEP, richardson: bool = False) -> np.ndarray:
    """d/deps f at lam by central differences, one-sided second order near the domain ends."""
    lo, hi = domain
    if not lo <= lam <= hi:
        raise ValueError(f"eps={lam} outside domain {domain}")
    if lam - step >= lo and lam + step <= hi:
        def central(s):
            return (f(lam + s) - f(lam - s)) / (2 * s)
        if richardson:
            return (4 * central(step / 2) - central(step)) / 3
        return central(step)
    s = step if lam + 2 * step <= hi else -step
    return (-3 * f(lam) + 4 * f(lam + s) - f(lam + 2 * s)) / (2 * s)


def _derivative(d: HomDeformation, lam: float, h: GroupElement, fd_step: float, richardson: bool,
                use_analytic: bool) -> np.ndarray:
    if use_analytic and d.d_eps is not None:
        return np.asarray(d.d_eps(lam, h))
    return eps_derivative(lambda e: d.eval(e, h).matrix, lam, d.eps_domain, fd_step, richardson)


def deformation_cocycle(d: HomDeformation, lam: float, *, fd_step: float = FD_STEP, richardson: bool = False,
                        use_analytic: bool = True) -> Cochain:
    """X_lam(h) = (d/deps phi_eps(h))|_lam phi_lam(h)^-1 in algebra coordinates."""
    phi = d.at(lam)
    rep = pullback_adjoint(d.source, d.target, phi)

    def X(h: GroupElement) -> np.ndarray:
        V = _derivative(d, lam, h, fd_step, richardson, use_analytic)
        return right_translate_to_identity(phi(h), V).coords

    return Cochain(1, rep, X)


def _cocycle(d: HomDeformation, lam: float, config: PipelineConfig) -> Cochain:
    return deformation_cocycle(d, lam, fd_step=config.fd_step, richardson=config.richardson,
                               use_analytic=config.use_analytic)


def verify_deformation_cocycle(d: HomDeformation, lam: float, samples: Sequence[Sequence[GroupElement]],
                               **kwargs) -> float:
    """Cocycle defect of X_lam over sampled pairs."""
    return cocycle_defect(deformation_cocycle(d, lam, **kwargs), samples)


def homomorphism_defect(d: HomDeformation, eps: float, pairs: Sequence[Sequence[GroupElement]]) -> float:
    one = d.source.identity()
    worst = group_distance(d(eps, one), d.target.identity())
    for a, b in pairs:
        lhs = d(eps, a @ b)
        rhs = d(eps, a) @ d(eps, b)
        worst = max(worst, group_distance(lhs, rhs))
    return worst


class Transgression(NamedTuple):
    """Outcome of solving X = delta(u) at one eps.

    ``u`` is None when the residual exceeds the tolerance; ``candidate`` always
    holds the best u found.
    """

    u: AlgebraVector | None
    residual: float
    method: str
    candidate: AlgebraVector
    rank_deficient: bool = False


def transgression_residual(X: Cochain, u: np.ndarray, samples: Sequence[GroupElement]) -> float:
    du = coboundary(constant_cochain(X.rep, u))
    return max(float(np.linalg.norm(X(h) - du(h))) for h in samples)


def transgress_haar(d: HomDeformation, lam: float, q: HaarQuadrature, samples: Sequence[GroupElement] | None = None,
                    *, tol: float = Tolerances().transgression_tol, X: Cochain | None = None,
                    **kwargs) -> Transgression:
    """u_lam = -sum_i w_i X_lam(node_i), the Haar average of the cocycle."""
    if not d.source.is_compact:
        raise UnsupportedGroupError(f"Haar transgression needs a compact source, got {d.source.name}")
    if q.descriptor != d.source:
        raise ValueError("quadrature is not built on the source group")
    X = X or deformation_cocycle(d, lam, **kwargs)
    u = -q.integrate(X)
    if samples is None:
        samples = [d.source.random_element(np.random.default_rng(0)) for _ in range(8)]
    residual = transgression_residual(X, u, samples)
    vec = d.target.vector(u)
    return Transgression(vec if residual <= tol else None, residual, "Haar", vec)


def transgress_least_squares(d: HomDeformation, lam: float, samples: Sequence[GroupElement], *,
                             tol: float = Tolerances().transgression_tol, X: Cochain | None = None,
                             **kwargs) -> Transgression:
    """Minimize sum_h |X(h) - (Ad_{phi(h)} u - u)|^2 over u (minimum-norm when rank deficient)."""
    dim = d.target.dim
    if len(samples) < dim:
        raise ValueError(f"need at least {dim} samples, got {len(samples)}")
    X = X or deformation_cocycle(d, lam, **kwargs)
    blocks = [X.rep.matrix(h) - np.eye(dim) for h in samples]
    rhs = [X(h) for h in samples]
    u, _, rank, _ = np.linalg.lstsq(np.vstack(blocks), np.concatenate(rhs), rcond=None)
    residual = max(float(np.linalg.norm(A @ u - b)) for A, b in zip(blocks, rhs))
    vec = d.target.vector(u)
    return Transgression(vec if residual <= tol else None, residual, "LeastSquares", vec, rank < dim)


@dataclass(frozen=True, eq=False)
class TransgressionPath:
    eps_grid: np.ndarray
    values: list[AlgebraVector]
    method: str
    residuals: np.ndarray

    def __post_init__(self):
        if len(self.eps_grid) != len(self.values) or len(self.values) != len(self.residuals):
            raise ValueError("grid, values and residuals must have equal length")
        if np.any(np.asarray(self.residuals) < 0):
            raise ValueError("residuals must be nonnegative")

    @property
    def coords(self) -> np.ndarray:
        return np.array([v.coords for v in self.values])

    @property
    def descriptor(self) -> GroupDescriptor:
        return self.values[0].descriptor

    def negated(self) -> TransgressionPath:
        return TransgressionPath(self.eps_grid, [-v for v in self.values], self.method, self.residuals)


def path_velocity(g_path: Sequence[GroupElement], eps_grid: Sequence[float], lam: float) -> AlgebraVector:
    """u_lam = -(dg/deps)(lam) g_lam^-1 from a sampled path, by 5-point finite differences."""
    grid = np.asarray(eps_grid, dtype=float)
    hits = np.flatnonzero(np.isclose(grid, lam, rtol=0, atol=1e-12))
    if len(hits) == 0:
        raise ValueError(f"eps={lam} is not a grid node")
    i = int(hits[0])
    idx = stencil(len(grid), i)
    w = fd_weights(grid[i], grid[idx])
    gdot = sum(wk * g_path[k].matrix for wk, k in zip(w, idx))
    return -right_translate_to_identity(g_path[i], gdot)


def moser_reconstruct(t: TransgressionPath, interpolation: str = "cubic") -> list[GroupElement]:
    """Solve dg/deps = -u(eps) g, g(0) = 1 by RK4 on the transgression grid.

    Between grid nodes u is interpolated (cubic spline by default, which
    keeps the scheme fourth order).  Raises FlowDiverged on basin violation.
    """
    desc = t.descriptor
    u = interpolant(t.eps_grid, t.coords, interpolation)
    return right_invariant_flow(lambda e: -desc.coords_to_matrix(u(e)), desc, list(t.eps_grid))


@dataclass(eq=False)
class TrivialityCertificate:
    verdict: Verdict
    eps_grid: np.ndarray
    g_path: list[GroupElement]
    conjugation_error: np.ndarray
    transgression: TransgressionPath
    cocycle_defect: np.ndarray
    tolerances: Tolerances
    local_eps_max: float | None = None
    failing_eps: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def max_conjugation_error(self) -> float:
        e = self.conjugation_error[np.isfinite(self.conjugation_error)]
        return float(e.max()) if len(e) else float("nan")

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.TRIVIALLY_CERTIFIED


def _samples(desc: GroupDescriptor, config: PipelineConfig, rng: np.random.Generator) -> list[GroupElement]:
    radius = None if desc.is_compact else config.sample_radius
    return [desc.random_element(rng, radius) for _ in range(config.sample_count)]


def eps_grid(config: PipelineConfig) -> np.ndarray:
    return np.linspace(0.0, config.eps_max, config.eps_steps + 1)


def conjugation_errors(phi: Callable[[float, GroupElement], GroupElement], base: Callable[[GroupElement], GroupElement],
                       g_path: Sequence[GroupElement], grid: Sequence[float],
                       samples: Sequence[GroupElement]) -> np.ndarray:
    """max_h |phi_eps(h) - g_eps base(h) g_eps^-1| per grid node."""
    base_vals = [base(h) for h in samples]
    out = []
    for eps, g in zip(grid, g_path):
        out.append(max(group_distance(phi(eps, h), conjugate(g, b)) for h, b in zip(samples, base_vals)))
    return np.array(out)


def _prefix_end(grid: np.ndarray, ok: np.ndarray) -> float | None:
    bad = np.flatnonzero(~ok)
    n = len(grid) if len(bad) == 0 else int(bad[0])
    return float(grid[n - 1]) if n > 0 else None


def certify_trivial(d: HomDeformation, config: PipelineConfig | None = None,
                    samples: Sequence[GroupElement] | None = None) -> TrivialityCertificate:
    """Cocycle -> transgression -> Moser flow -> conjugation check, on the grid [0, eps_max]."""
    config = config or PipelineConfig()
    tols = config.tolerances
    lo, hi = d.eps_domain
    if not (lo <= 0.0 and config.eps_max <= hi):
        raise InvalidDeformationError(f"[0, {config.eps_max}] not inside eps domain {d.eps_domain}")
    rng = np.random.default_rng(config.seed)
    samples = list(samples) if samples is not None else _samples(d.source, config, rng)
    pairs = list(zip(samples[::2], samples[1::2]))
    grid = eps_grid(config)

    for eps in (grid[0], grid[len(grid) // 2], grid[-1]):
        defect = homomorphism_defect(d, eps, pairs)
        if defect > tols.hom_tol:
            raise InvalidDeformationError(f"phi_{eps:g} is not a homomorphism (defect {defect:.3e})")

    quad = haar_quadrature(d.source, config.resolution) if d.source.is_compact else None
    values, residuals, defects = [], [], []
    for eps in grid:
        X = _cocycle(d, eps, config)
        defects.append(cocycle_defect(X, pairs))
        if quad is not None:
            tr = transgress_haar(d, eps, quad, samples, tol=tols.transgression_tol, X=X)
        else:
            tr = transgress_least_squares(d, eps, samples, tol=tols.transgression_tol, X=X)
        values.append(tr.candidate)
        residuals.append(tr.residual)
    residuals = np.array(residuals)
    path = TransgressionPath(grid, values, "Haar" if quad is not None else "LeastSquares", residuals)
    base = d.at(0.0)

    def conj_fn(g_path):
        return conjugation_errors(d.eval, base, g_path, grid[:len(g_path)], samples)

    return finish_certificate(path, np.array(defects), tols, config, conj_fn)


def finish_certificate(path: TransgressionPath, defects: np.ndarray, tols: Tolerances, config: PipelineConfig,
                       conj_fn: Callable[[list[GroupElement]], np.ndarray], extras: dict | None = None,
                       flow_stop: int | None = None) -> TrivialityCertificate:
    """Shared tail of the pipelines: Moser flow on the transgressible prefix, conjugation check, verdict.

    ``flow_stop`` is the index of the first grid node an auxiliary flow failed
    to reach; ``conj_fn`` maps a g-path to errors on the matching grid prefix.
    """
    grid, residuals = path.eps_grid, path.residuals
    conj = np.full(len(grid), np.nan)
    trans_ok = residuals <= tols.transgression_tol
    n_ok = len(grid) if trans_ok.all() else int(np.flatnonzero(~trans_ok)[0])
    verdict = Verdict.TRIVIALLY_CERTIFIED if n_ok == len(grid) else Verdict.NOT_TRANSGRESSIBLE
    failing = None if n_ok == len(grid) else float(grid[n_ok])
    if flow_stop is not None and flow_stop < n_ok:
        n_ok, verdict, failing = flow_stop, Verdict.FLOW_DIVERGED, float(grid[flow_stop])
    g_path: list[GroupElement] = []
    if n_ok >= 2:
        try:
            g_path = moser_reconstruct(_truncate(path, n_ok), config.interpolation)
        except FlowDiverged as exc:
            verdict, failing = Verdict.FLOW_DIVERGED, exc.eps
            j = int(np.searchsorted(grid, exc.eps))
            g_path = moser_reconstruct(_truncate(path, j), config.interpolation) if j >= 2 else []
    if not g_path and n_ok >= 1:
        g_path = [path.descriptor.identity()]
    if g_path:
        conj[:len(g_path)] = conj_fn(g_path)
    if verdict is Verdict.TRIVIALLY_CERTIFIED and not np.all(conj <= tols.certificate_tol):
        verdict = Verdict.INCONCLUSIVE
        failing = float(grid[np.flatnonzero(~(conj <= tols.certificate_tol))[0]])
    ok = trans_ok & (conj <= tols.certificate_tol)
    return TrivialityCertificate(verdict, grid, g_path, conj, path, defects, tols, _prefix_end(grid, ok), failing,
                                 dict(extras or {}))


def _truncate(path: TransgressionPath, n: int) -> TransgressionPath:
    return TransgressionPath(path.eps_grid[:n], path.values[:n], path.method, path.residuals[:n])


def automorphism_flow_eval(Z_path: Callable[[float], Cochain], g: GroupElement, eps_target: float,
                           steps: int = 20, eps_start: float = 0.0) -> GroupElement:
    """Flow of the right-invariant field x -> Z_eps(x) x from eps_start to eps_target, applied to g."""
    desc = g.descriptor

    def field(t, x):
        return desc.coords_to_matrix(Z_path(t)(GroupElement(x, desc))) @ x

    times = np.linspace(eps_start, eps_target, steps + 1)
    return rk4_flow(field, g, list(times))[-1]


def preimage_residual(d: HomDeformation, Z_path: Callable[[float], Cochain], u_path: Callable[[float], AlgebraVector],
                      eps_values: Sequence[float], samples: Sequence[GroupElement],
                      config: PipelineConfig | None = None) -> np.ndarray:
    """Per-eps max_h |X_eps(h) - Z_eps(phi_eps(h)) - delta(u_eps)(h)|."""
    config = config or PipelineConfig()
    out = []
    for eps in eps_values:
        X = _cocycle(d, eps, config)
        du = coboundary(constant_cochain(X.rep, u_path(eps).coords))
        Z = Z_path(eps)
        out.append(max(float(np.linalg.norm(X(h) - Z(d(eps, h)) - du(h))) for h in samples))
    return np.array(out)


def corrected_family(d: HomDeformation, Z_path: Callable[[float], Cochain], steps: int = 20) -> HomDeformation:
    """phi'_eps = F_eps^-1 o phi_eps, with F_eps^-1 obtained by flowing back from eps to 0."""

    def ev(eps, h):
        return automorphism_flow_eval(Z_path, d(eps, h), 0.0, steps, eps_start=eps)

    return HomDeformation(d.source, d.target, ev, None, d.eps_domain, f"{d.name}:corrected")


def certify_weakly_trivial(d: HomDeformation, Z_path: Callable[[float], Cochain],
                           u_path: Callable[[float], AlgebraVector], config: PipelineConfig | None = None,
                           samples: Sequence[GroupElement] | None = None) -> TrivialityCertificate:
    """Check X = phi^*Z + delta(u), untwist by the automorphism flow of Z, then certify the rest."""
    config = config or PipelineConfig()
    tols = config.tolerances
    rng = np.random.default_rng(config.seed)
    samples = list(samples) if samples is not None else _samples(d.source, config, rng)
    grid = eps_grid(config)
    pre = preimage_residual(d, Z_path, u_path, grid, samples, config)
    if np.any(pre > tols.transgression_tol):
        pairs = list(zip(samples[::2], samples[1::2]))
        defects = np.array([cocycle_defect(_cocycle(d, e, config), pairs) for e in grid])
        path = TransgressionPath(grid, [u_path(e) for e in grid], "UserSupplied", pre)
        bad = float(grid[np.flatnonzero(pre > tols.transgression_tol)[0]])
        return TrivialityCertificate(Verdict.PREIMAGE_REJECTED, grid, [], np.full(len(grid), np.nan), path, defects,
                                     tols, _prefix_end(grid, pre <= tols.transgression_tol), bad,
                                     {"preimage_residual": pre})
    cert = certify_trivial(corrected_family(d, Z_path, config.flow_substeps), config, samples)
    cert.extras["preimage_residual"] = pre
    return cert


def inner_family(phi: Callable[[GroupElement], GroupElement], path: Callable[[float], GroupElement],
                 source: GroupDescriptor, target: GroupDescriptor, d_path: Callable[[float], np.ndarray] | None = None,
                 eps_domain: tuple[float, float] = (-1.0, 1.0), name: str = "") -> HomDeformation:
    """phi_eps = I_{g_eps} o phi for a known path g_eps; analytic derivative when d_path is given."""

    def ev(eps, h):
        return conjugate(path(eps), phi(h))

    d_eps = None
    if d_path is not None:
        def d_eps(eps, h):
            g = path(eps)
            gi = inverse(g).matrix
            gd = np.asarray(d_path(eps))
            p = phi(h).matrix
            return gd @ p @ gi - g.matrix @ p @ gi @ gd @ gi

    return HomDeformation(source, target, ev, d_eps, eps_domain, name)
