"""Solver configuration shared by the functional-equation solvers."""
from dataclasses import asdict, dataclass, fields

from .errors import InputError


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and continuation settings.

    Parameters
    ----------
    tol : float
        Target fixed-point residual, measured as ``|f - RHS(f)| / max(1, |f|)``.
    max_iter : int
        Iteration cap per continuation level.
    damping : float
        Weight of the new iterate in ``f <- (1 - d) f + d RHS(f)``.
    epsilon_inversion : float
        Distance to the real axis used by Stieltjes inversion.
    y_start, y_min : float
        Continuation starts at ``Im z = y_start`` and may descend to ``y_min``.
    """

    tol: float = 1e-12
    max_iter: int = 10_000
    damping: float = 0.5
    epsilon_inversion: float = 1e-4
    y_start: float = 1.0
    y_min: float = 1e-4

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise InputError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if not self.epsilon_inversion > 0:
            raise InputError("epsilon_inversion must be positive")
        if not 0 < self.y_min <= self.y_start:
            raise InputError("require 0 < y_min <= y_start")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown solver fields: {sorted(unknown)}")
        kwargs = {}
        for f in fields(cls):
            if f.name in data:
                kwargs[f.name] = int(data[f.name]) if f.name == "max_iter" else float(data[f.name])
        return cls(**kwargs)


DEFAULT_CONFIG = SolverConfig()
