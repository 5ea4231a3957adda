from dataclasses import dataclass, field

import numpy as np

from src.custom_types.images import FloatArray


@dataclass(frozen=True)
class FitOptions:
    xtol: float = 1e-10
    gtol: float = 1e-12
    ftol: float = 1e-12
    max_iterations: int = 200


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    params: FloatArray
    sigma: FloatArray
    covariance: FloatArray
    residual_rms: float
    converged: bool
    iterations: int
    message: str = ""
    n_points: int = field(default=0)

    def __post_init__(self) -> None:
        assert len(self.names) == len(self.params), "one name per parameter"

    def index(self, name: str) -> int:
        return self.names.index(name)

    def value(self, name: str) -> float:
        return float(self.params[self.index(name)])

    def error(self, name: str) -> float:
        return float(self.sigma[self.index(name)])

    def as_dict(self) -> dict[str, object]:
        return {
            "params": {n: float(v) for n, v in zip(self.names, self.params)},
            "sigma": {n: float(v) for n, v in zip(self.names, self.sigma)},
            "covariance": self.covariance.tolist(),
            "residual_rms": self.residual_rms,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }


def sigma_from_covariance(covariance: FloatArray) -> FloatArray:
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


def failed_result(names: tuple[str, ...], p0: FloatArray, message: str) -> FitResult:
    n = len(names)
    return FitResult(
        names=names,
        params=np.asarray(p0, dtype=float),
        sigma=np.full(n, np.nan),
        covariance=np.full((n, n), np.nan),
        residual_rms=float("nan"),
        converged=False,
        iterations=0,
        message=message,
    )
