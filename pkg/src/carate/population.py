"""Data-generating processes and potential-outcome sampling.

A :class:`PopulationSpec` describes a super-population for a binary-treatment
experiment: covariate dimension, per-arm conditional mean and scale functions,
and samplers for covariates and unit-level noise.  Outcomes follow the
location-scale model

    Y(a) = mean_fn(a, Z) + scale_fn(a, Z) * eps,

with a single noise draw ``eps`` shared by both arms of a unit.  Four builtin
processes (``dgp1`` .. ``dgp4``) are registered; user-defined processes can be
added with :func:`register_dgp`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import substream

__all__ = [
    "PopulationSpec",
    "PotentialSample",
    "BUILTIN_DGPS",
    "make_builtin_dgp",
    "make_dgp",
    "register_dgp",
    "sample_population",
    "true_ate",
]

ArmFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PopulationSpec:
    """Immutable description of a data-generating process.

    Parameters
    ----------
    dim_k : int
        Covariate dimension.
    mean_fn, scale_fn : callable ``(arm, Z) -> array``
        Conditional mean / conditional scale of the potential outcome for
        ``arm`` in {0, 1}, evaluated row-wise on an ``(n, dim_k)`` covariate
        matrix.  ``scale_fn`` must be nonnegative.
    covariate_sampler : callable ``(rng, n) -> (n, dim_k) array``
    noise_sampler : callable ``(rng, n) -> (n,) array``
        Mean-zero unit-level noise (standard normal for the builtins).
    true_ate : float
        Population average treatment effect.
    name : str
        Identifier used in seeds, configs and reports.
    """

    dim_k: int
    mean_fn: ArmFn
    scale_fn: ArmFn
    covariate_sampler: Callable[[np.random.Generator, int], np.ndarray]
    noise_sampler: Callable[[np.random.Generator, int], np.ndarray]
    true_ate: float
    name: str = "custom"

    def _as_matrix(self, z) -> tuple[np.ndarray, bool]:
        arr = np.asarray(z, dtype=float)
        single = arr.ndim < 2
        arr = np.atleast_1d(arr)
        if arr.ndim == 1:
            # A 1-d input is one point: a scalar for k = 1, else a k-vector.
            arr = arr.reshape(1, -1) if self.dim_k > 1 else arr.reshape(-1, 1)
            single = arr.shape[0] == 1
        if arr.shape[1] != self.dim_k:
            raise ValueError(f"expected covariates with {self.dim_k} columns, got shape {arr.shape}")
        return arr, single

    def mean(self, arm: int, z):
        """Evaluate ``mean_fn`` on a single point or an ``(n, k)`` matrix."""
        zz, single = self._as_matrix(z)
        out = np.asarray(self.mean_fn(arm, zz), dtype=float)
        return float(out[0]) if single else out

    def scale(self, arm: int, z):
        """Evaluate ``scale_fn`` on a single point or an ``(n, k)`` matrix."""
        zz, single = self._as_matrix(z)
        out = np.asarray(self.scale_fn(arm, zz), dtype=float)
        return float(out[0]) if single else out


@dataclass(frozen=True)
class PotentialSample:
    """One i.i.d. draw of potential outcomes and covariates."""

    y0: np.ndarray
    y1: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y0 = np.asarray(self.y0, dtype=float)
        y1 = np.asarray(self.y1, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "z", z)
        n = len(y0)
        if n < 1 or len(y1) != n or z.shape[0] != n:
            raise ValueError("y0, y1 and z must share a common length n >= 1")
        for name, arr in (("y0", y0), ("y1", y1), ("z", z)):
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite values in {name}")

    @property
    def n(self) -> int:
        return len(self.y0)


def _uniform_cube(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(n, k))


def _std_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


def _abs_scale(arm: int, z: np.ndarray) -> np.ndarray:
    out = 1.0 + np.abs(z[:, 0])
    return np.sqrt(2.0) * out if arm == 1 else out


def _dgp1_mean(arm: int, z: np.ndarray) -> np.ndarray:
    base = np.sin(10.0 * np.pi * z[:, 0])
    if arm == 0:
        return base
    return base + 2.0 * np.cos(10.0 * np.pi * z[:, 0])


def _step_mean(z1: np.ndarray) -> np.ndarray:
    # Odd step function: floor of the magnitude, then signed.  Oddness makes
    # the builtin ATE exactly 0; the interior jumps sit at the nonzero
    # multiples of 0.1, so the function is constant on the 20-strata segments.
    sgn = np.where(z1 < 0.0, -1.0, 1.0)
    return sgn * np.floor(10.0 * np.abs(z1)) / 10.0


def _dgp2_mean(arm: int, z: np.ndarray) -> np.ndarray:
    base = _step_mean(z[:, 0])
    if arm == 0:
        return base
    return base + 2.0 * base**3


def _ridge(z: np.ndarray, jump: bool) -> np.ndarray:
    out = np.cos(2.0 * np.pi * z[:, 0] * z[:, 1]) + (z[:, 2] + z[:, 3] - 1.0) ** 2 + z[:, 4] / 2.0
    if jump:
        out = out + (z[:, 0] >= 0.0)
    return out


def _multi_mean(jump: bool) -> ArmFn:
    def mean(arm: int, z: np.ndarray) -> np.ndarray:
        if arm == 0:
            # Control arm evaluates the same surface on reversed coordinates,
            # so the unit-level effect varies with z while the ATE stays 0.
            return _ridge(z[:, ::-1], jump)
        return _ridge(z, jump) + 2.0 * np.sin(2.0 * np.pi * z[:, 0] * z[:, 1])

    return mean


def _flat_scale(arm: int, z: np.ndarray) -> np.ndarray:
    return np.full(z.shape[0], np.sqrt(2.0) if arm == 1 else 1.0)


def _make(name: str, k: int, mean_fn: ArmFn, scale_fn: ArmFn) -> PopulationSpec:
    return PopulationSpec(
        dim_k=k,
        mean_fn=mean_fn,
        scale_fn=scale_fn,
        covariate_sampler=lambda rng, n, _k=k: _uniform_cube(rng, n, _k),
        noise_sampler=_std_normal,
        true_ate=0.0,
        name=name,
    )


BUILTIN_DGPS = ("dgp1", "dgp2", "dgp3", "dgp4")

_REGISTRY: dict[str, Callable[[], PopulationSpec]] = {
    "dgp1": lambda: _make("dgp1", 1, _dgp1_mean, _abs_scale),
    "dgp2": lambda: _make("dgp2", 1, _dgp2_mean, _abs_scale),
    "dgp3": lambda: _make("dgp3", 5, _multi_mean(jump=False), _flat_scale),
    "dgp4": lambda: _make("dgp4", 5, _multi_mean(jump=True), _flat_scale),
}


def make_builtin_dgp(dgp_id: str) -> PopulationSpec:
    """Return one of the four builtin processes (``"dgp1"`` .. ``"dgp4"``)."""
    key = str(dgp_id).lower()
    if key not in BUILTIN_DGPS:
        raise ValueError(f"unknown builtin DGP {dgp_id!r}; expected one of {BUILTIN_DGPS}")
    return _REGISTRY[key]()


def register_dgp(name: str, factory: Callable[[], PopulationSpec]) -> None:
    """Register a user-defined process under ``name`` for config/CLI use."""
    key = str(name).lower()
    if key in BUILTIN_DGPS:
        raise ValueError(f"cannot override builtin DGP {name!r}")
    _REGISTRY[key] = factory


def make_dgp(name: str) -> PopulationSpec:
    """Instantiate a registered process by name."""
    key = str(name).lower()
    if key not in _REGISTRY:
        raise ValueError(f"unknown DGP {name!r}; registered: {sorted(_REGISTRY)}")
    return _REGISTRY[key]()


def sample_population(spec: PopulationSpec, n: int, seed: int) -> PotentialSample:
    """Draw ``n`` i.i.d. units from ``spec``.

    Covariates are drawn first, then one noise value per unit; the same noise
    value enters both potential outcomes.  Identical ``(spec, n, seed)``
    arguments reproduce the sample bit for bit.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = substream(seed)
    z = np.asarray(spec.covariate_sampler(rng, n), dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    if z.shape != (n, spec.dim_k):
        raise ValueError(f"covariate sampler returned shape {z.shape}, expected {(n, spec.dim_k)}")
    eps = np.asarray(spec.noise_sampler(rng, n), dtype=float)
    y0 = spec.mean_fn(0, z) + spec.scale_fn(0, z) * eps
    y1 = spec.mean_fn(1, z) + spec.scale_fn(1, z) * eps
    return PotentialSample(y0=y0, y1=y1, z=z)


def true_ate(spec: PopulationSpec) -> float:
    """The population average treatment effect stored in ``spec``."""
    return float(spec.true_ate)
