from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

TRANSGRESSION_TOL = 1e-6
CERTIFICATE_TOL = 1e-4
HOM_TOL = 1e-8
FD_STEP = 1e-5


@dataclass(frozen=True)
class Tolerances:
    transgression_tol: float = TRANSGRESSION_TOL
    certificate_tol: float = CERTIFICATE_TOL
    hom_tol: float = HOM_TOL

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{k} must be positive, got {v}")


@dataclass(frozen=True)
class PipelineConfig:
    """Numerical knobs shared by the certification pipelines.

    ``sample_radius`` bounds the algebra coordinates of verification samples
    on non-compact groups; compact groups are sampled over the whole group.
    """

    eps_max: float = 0.5
    eps_steps: int = 50
    resolution: int = 32
    sample_count: int = 24
    fd_step: float = FD_STEP
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    sample_radius: float = 1.0
    richardson: bool = False
    use_analytic: bool = True
    interpolation: str = "cubic"
    flow_substeps: int = 20

    def __post_init__(self):
        if not self.eps_max > 0:
            raise ValueError("eps_max must be positive")
        if self.eps_steps < 2:
            raise ValueError("eps_steps must be at least 2")
        if self.resolution < 1 or self.sample_count < 1:
            raise ValueError("resolution and sample_count must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.interpolation not in ("cubic", "linear"):
            raise ValueError("interpolation must be 'cubic' or 'linear'")

    def with_(self, **changes) -> PipelineConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
