"""Scenario files: a market, an optional regulation policy and solver settings, as JSON."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InvalidParams, ScenarioError
from .params import DEFAULT_SETTINGS, MarketParams, SolverSettings, UtilityShape
from .regulation import RegulationPolicy

TOP_FIELDS = ("K", "alpha", "beta", "gamma", "cost", "h_user", "h_buyer", "policy", "settings")
REQUIRED = ("alpha", "beta", "gamma", "cost")


def encode_float(v: float):
    """JSON-safe float: infinities become strings, finite values keep their repr."""
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        return encode_float(obj)
    if hasattr(obj, "item") and callable(obj.item):
        return to_jsonable(obj.item())
    return obj


def decode_float(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return v


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _shape(data: dict, name: str) -> UtilityShape:
    try:
        return UtilityShape.from_dict(data.get(name, "identity"))
    except InvalidParams as exc:
        raise InvalidParams(f"{name}: {exc}", name) from None


@dataclass(frozen=True)
class Scenario:
    params: MarketParams
    policy: RegulationPolicy | None = None
    settings: SolverSettings = DEFAULT_SETTINGS

    def to_dict(self) -> dict:
        p = self.params
        data = {
            "K": p.K,
            "alpha": p.alpha,
            "beta": p.beta,
            "gamma": list(p.gamma),
            "cost": list(p.cost),
            "h_user": p.h_user.to_dict(),
            "h_buyer": p.h_buyer.to_dict(),
        }
        if self.policy is not None:
            data["policy"] = self.policy.to_dict()
        if self.settings != DEFAULT_SETTINGS:
            data["settings"] = self.settings.to_dict()
        return data

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise InvalidParams("scenario must be a JSON object", None)
        unknown = [k for k in data if k not in TOP_FIELDS]
        if unknown:
            raise InvalidParams(f"unknown field {unknown[0]!r}", unknown[0])
        for k in REQUIRED:
            if k not in data:
                raise InvalidParams(f"missing required field {k!r}", k)
        for k in ("gamma", "cost"):
            if not isinstance(data[k], list):
                raise InvalidParams(f"{k} must be a list of numbers", k)
        for k in ("alpha", "beta"):
            if isinstance(data[k], bool) or not isinstance(data[k], (int, float)):
                raise InvalidParams(f"{k} must be a number", k)
        params = MarketParams(
            alpha=data["alpha"], beta=data["beta"], gamma=tuple(data["gamma"]),
            cost=tuple(data["cost"]),
            h_user=_shape(data, "h_user"), h_buyer=_shape(data, "h_buyer"),
        )
        if "K" in data and data["K"] != params.K:
            raise InvalidParams(f"K = {data['K']} but gamma lists {params.K} platforms", "K")
        policy = None
        if data.get("policy") is not None:
            policy = RegulationPolicy.from_dict(data["policy"], params.K)
        settings = DEFAULT_SETTINGS
        if data.get("settings") is not None:
            raw = data["settings"]
            if not isinstance(raw, dict):
                raise InvalidParams("settings must be an object", "settings")
            names = {f.name for f in fields(SolverSettings)}
            bad = [k for k in raw if k not in names]
            if bad:
                raise InvalidParams(f"unknown setting {bad[0]!r}", bad[0])
            settings = SolverSettings(**raw)
        return cls(params, policy, settings)


def _line_of(text: str, name) -> int | None:
    if name is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(str(name)), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def loads(text: str, path=None) -> Scenario:
    """Parse and validate scenario JSON, reporting the offending line and field."""
    try:
        data = json.loads(text, parse_constant=lambda c: math.inf if c == "Infinity" else c)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", None, exc.lineno, path) from None
    try:
        return Scenario.from_dict(data)
    except InvalidParams as exc:
        field = exc.field
        raise ScenarioError(f"field {field!r}: {exc}" if field else str(exc), field,
                            _line_of(text, field), path) from None


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", None, None, path) from None
    return loads(text, path)


__all__ = ["Scenario", "load", "loads", "dumps", "to_jsonable", "decode_float"]
