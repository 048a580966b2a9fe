"""Game parameters, noise profiles, utility shapes and solver settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParams

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class UtilityShape:
    """A concave, increasing map H: [0, 1] -> [0, 1] with H(0) = 0.

    Three kinds are supported: ``identity`` (the linear baseline),
    ``log1p`` (H(x) = log(1 + x) / log 2) and ``table`` (piecewise-linear
    interpolation through the points ``(x, y)``).
    """

    kind: str = "identity"
    x: tuple = ()
    y: tuple = ()

    def __post_init__(self):
        if self.kind not in ("identity", "log1p", "table"):
            raise InvalidParams(f"unknown utility shape kind {self.kind!r}", "kind")
        if self.kind != "table":
            if self.x or self.y:
                raise InvalidParams(f"shape {self.kind!r} takes no table", "x")
            return
        xs = tuple(float(v) for v in self.x)
        ys = tuple(float(v) for v in self.y)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "y", ys)
        if len(xs) < 2 or len(xs) != len(ys):
            raise InvalidParams("table needs at least two (x, y) points", "x")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise InvalidParams("table x must start at 0 and end at 1", "x")
        if ys[0] != 0.0:
            raise InvalidParams("table must satisfy H(0) = 0", "y")
        if any(v < 0.0 or v > 1.0 for v in ys):
            raise InvalidParams("table y values must lie in [0, 1]", "y")
        dx = np.diff(xs)
        if np.any(dx <= 0):
            raise InvalidParams("table x must be strictly increasing", "x")
        slopes = np.diff(ys) / dx
        if np.any(slopes <= 0):
            raise InvalidParams("table slopes must be strictly positive", "y")
        if np.any(np.diff(slopes) > 1e-12):
            raise InvalidParams("table must be concave", "y")

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def __call__(self, v):
        if self.kind == "identity":
            return v
        if self.kind == "log1p":
            return np.log1p(v) / LOG2
        return np.interp(v, self.x, self.y)

    def inverse(self, v):
        """Inverse map on the range of H."""
        if self.kind == "identity":
            return v
        if self.kind == "log1p":
            return np.expm1(np.asarray(v, dtype=float) * LOG2)
        return np.interp(v, self.y, self.x)

    def slope_at_zero(self) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "log1p":
            return 1.0 / LOG2
        return (self.y[1] - self.y[0]) / (self.x[1] - self.x[0])

    def to_dict(self):
        if self.kind == "table":
            return {"kind": "table", "x": list(self.x), "y": list(self.y)}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, data) -> "UtilityShape":
        if isinstance(data, str):
            return cls(kind=data)
        if not isinstance(data, dict):
            raise InvalidParams("utility shape must be a string or object", "kind")
        unknown = set(data) - {"kind", "x", "y"}
        if unknown:
            raise InvalidParams(f"unknown shape fields {sorted(unknown)}", sorted(unknown)[0])
        return cls(kind=data.get("kind", "identity"), x=tuple(data.get("x", ())),
                   y=tuple(data.get("y", ())))


IDENTITY = UtilityShape()
LOG1P = UtilityShape("log1p")


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParams(f"{name} must be a number, got {value!r}", name) from None
    if not math.isfinite(value):
        raise InvalidParams(f"{name} must be finite, got {value!r}", name)
    return value


@dataclass(frozen=True)
class MarketParams:
    """Full description of one market: user, K platforms and a buyer.

    Attributes:
        alpha: weight the user places on privacy loss.
        beta: buyer's valuation of information.
        gamma: per-platform correlation with the buyer's target, in [0, 1].
        cost: per-platform cost of serving the user.
        h_user: shape applied to leaked information in the user's utility.
        h_buyer: shape applied to acquired information in the buyer's utility.
    """

    alpha: float
    beta: float
    gamma: tuple
    cost: tuple
    h_user: UtilityShape = IDENTITY
    h_buyer: UtilityShape = IDENTITY

    def __post_init__(self):
        alpha = _finite("alpha", self.alpha)
        beta = _finite("beta", self.beta)
        if alpha <= 0:
            raise InvalidParams(f"alpha must be positive, got {alpha}", "alpha")
        if beta < 0:
            raise InvalidParams(f"beta must be nonnegative, got {beta}", "beta")
        gamma = tuple(_finite("gamma", g) for g in self.gamma)
        cost = tuple(_finite("cost", c) for c in self.cost)
        if len(gamma) == 0:
            raise InvalidParams("at least one platform is required", "gamma")
        if len(cost) != len(gamma):
            raise InvalidParams(
                f"cost has {len(cost)} entries but gamma has {len(gamma)}", "cost")
        for i, g in enumerate(gamma):
            if not 0.0 <= g <= 1.0:
                raise InvalidParams(f"gamma[{i}] = {g} is outside [0, 1]", "gamma")
        for i, c in enumerate(cost):
            if c < 0:
                raise InvalidParams(f"cost[{i}] = {c} is negative", "cost")
        for name in ("h_user", "h_buyer"):
            if not isinstance(getattr(self, name), UtilityShape):
                raise InvalidParams(f"{name} must be a UtilityShape", name)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "cost", cost)

    @property
    def K(self) -> int:
        return len(self.gamma)

    @property
    def gamma_array(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)

    @property
    def linear(self) -> bool:
        return self.h_user.is_identity and self.h_buyer.is_identity

    def high_cost(self) -> list[int]:
        """Platforms whose cost exceeds the service value 1/2."""
        return [i for i, c in enumerate(self.cost) if c > 0.5]

    def low_cost(self) -> list[int]:
        return [i for i, c in enumerate(self.cost) if c <= 0.5]

    def with_(self, **changes) -> "MarketParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class NoiseProfile:
    """Per-platform noise standard deviations; ``inf`` means nothing is sold."""

    sigma: tuple

    def __post_init__(self):
        out = []
        for i, s in enumerate(self.sigma):
            try:
                s = float(s)
            except (TypeError, ValueError):
                raise InvalidParams(f"sigma[{i}] is not a number", "sigma") from None
            if math.isnan(s) or s < 0:
                raise InvalidParams(f"sigma[{i}] = {s} must be >= 0 or inf", "sigma")
            out.append(s)
        object.__setattr__(self, "sigma", tuple(out))

    @classmethod
    def from_variance(cls, variance: Iterable[float]) -> "NoiseProfile":
        return cls(tuple(math.sqrt(v) if math.isfinite(v) else math.inf for v in variance))

    @classmethod
    def silent(cls, K: int) -> "NoiseProfile":
        return cls((math.inf,) * K)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)

    @property
    def variance(self) -> tuple:
        return tuple(s * s for s in self.sigma)

    def __len__(self):
        return len(self.sigma)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by the solver, verifier and harness."""

    tol: float = 1e-7
    linalg_tol: float = 1e-9
    tie_tol: float = 1e-9
    search_limit: int = 16
    sweep_points: int = 200
    refine_step: float = 1e-3
    min_ratio: float = 1e-6
    mandate_cap: float = 1e12
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidParams(f"setting {f.name} must be numeric", f.name)
        for name in ("tol", "linalg_tol", "tie_tol", "refine_step", "min_ratio", "mandate_cap"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"setting {name} must be positive", name)
        if self.search_limit < 1 or self.sweep_points < 2:
            raise InvalidParams("search_limit >= 1 and sweep_points >= 2 required",
                                "search_limit")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_SETTINGS = SolverSettings()


def as_index_set(active: Iterable[int] | None, K: int) -> tuple:
    """Validate and sort a set of platform indices."""
    if active is None:
        return ()
    members = sorted(set(int(i) for i in active))
    for i in members:
        if not 0 <= i < K:
            raise IndexError(f"platform index {i} out of range for K={K}")
    return tuple(members)


def as_binary(vec: Sequence[int] | None, K: int, name: str) -> tuple:
    if vec is None:
        return (1,) * K
    vec = tuple(int(v) for v in vec)
    if len(vec) != K or any(v not in (0, 1) for v in vec):
        raise InvalidParams(f"{name} must be a 0/1 vector of length {K}", name)
    return vec
