"""Plain-text ``key = value`` configuration with dotted keys.

Every key has a type and a default. Values from a file can be overridden
by command-line flags of the same dotted name (``--engine.workers 8``).
"""
from __future__ import annotations

import os
from collections.abc import Mapping, Sequence
from pathlib import Path

from skewjoin.engine import EngineConfig
from skewjoin.geometry import Rect
from skewjoin.scheduler import CostModel
from skewjoin.workload import DataSpec, WorkloadSpec

ENV_VAR = "SKEWJOIN_CONFIG"


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> int | None:
    return None if s.strip().lower() in ("", "none", "auto") else int(s)


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _points(s: str) -> tuple[tuple[float, float], ...]:
    # "x:y,x:y"
    out = []
    for item in s.split(","):
        if item.strip():
            x, y = item.split(":")
            out.append((float(x), float(y)))
    return tuple(out)


def _words(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _toggles(s: str) -> tuple[bool, ...]:
    return tuple(_bool(v) for v in s.split(",") if v.strip())


# key -> (parser, default text)
SCHEMA: dict[str, tuple] = {
    "data.path": (str, ""),
    "data.count": (int, "5000"),
    "data.boundary": (_floats, "0,0,1000,1000"),
    "data.clusters": (int, "0"),
    "data.cluster_spread": (float, "0.03"),
    "data.background": (float, "1.0"),
    "data.seed": (int, "0"),
    "workload.path": (str, ""),
    "workload.kind": (str, "uniform"),
    "workload.count": (int, "500"),
    "workload.centers": (_points, ""),
    "workload.radii": (_floats, ""),
    "workload.weights": (_floats, ""),
    "workload.size_min": (float, "0.0"),
    "workload.size_max": (float, "0.02"),
    "workload.k": (int, "10"),
    "workload.seed": (int, "1"),
    "engine.partitions": (int, "4"),
    "engine.budget": (_opt_int, "auto"),
    "engine.filter": (_bool, "on"),
    "engine.scheduler": (_bool, "on"),
    "engine.filter_depth": (int, "8"),
    "engine.filter_budget_bits": (_opt_int, "auto"),
    "engine.strategy": (str, "query"),
    "engine.workers": (int, "1"),
    "engine.seed": (int, "0"),
    "engine.node_capacity": (int, "64"),
    "engine.max_depth": (int, "16"),
    "cost.p_e": (float, "0.2"),
    "cost.p_m": (float, "0.05"),
    "cost.p_r": (float, "0.01"),
    "cost.p_x": (float, "0.02"),
    "cost.lam": (float, "10"),
    "cost.alpha": (float, "0.1"),
    "cost.theta": (float, "2"),
    "cost.mode": (str, "sampled"),
    "bench.operators": (_words, "range,knn"),
    "bench.filter": (_toggles, "off,on"),
    "bench.scheduler": (_toggles, "off,on"),
    "bench.partitions": (_ints, "4,16"),
    "bench.out": (str, "metrics.csv"),
    "bench.summary": (str, ""),
}


class Config:
    """Parsed configuration; ``cfg["engine.workers"]`` returns a typed value."""

    def __init__(self, raw: Mapping[str, str] | None = None):
        self.raw = {k: d for k, (_, d) in SCHEMA.items()}
        self.values = {}
        for k in self.raw:
            self.values[k] = self._parse(k, self.raw[k])
        if raw:
            self.update(raw)

    @staticmethod
    def _parse(key: str, text: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            return SCHEMA[key][0](text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc

    def update(self, raw: Mapping[str, str]) -> None:
        for k, v in raw.items():
            self.values[k] = self._parse(k, v)
            self.raw[k] = v

    def __getitem__(self, key: str):
        if key not in self.values:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def cost_model(self) -> CostModel:
        try:
            return CostModel(**{k: self[f"cost.{k}"] for k in
                                ("p_e", "p_m", "p_r", "p_x", "lam", "alpha", "theta", "mode")})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def engine(self, **overrides) -> EngineConfig:
        kw = dict(
            n_partitions=self["engine.partitions"], budget=self["engine.budget"],
            use_filter=self["engine.filter"], use_scheduler=self["engine.scheduler"],
            filter_depth=self["engine.filter_depth"],
            filter_budget_bits=self["engine.filter_budget_bits"], cost=self.cost_model(),
            strategy=self["engine.strategy"], seed=self["engine.seed"],
            workers=self["engine.workers"], node_capacity=self["engine.node_capacity"],
            max_depth=self["engine.max_depth"],
        )
        kw.update(overrides)
        try:
            return EngineConfig(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def boundary(self) -> Rect:
        b = self["data.boundary"]
        if len(b) != 4:
            raise ConfigError("data.boundary needs min_x,min_y,max_x,max_y")
        try:
            return Rect(*b)
        except ValueError as exc:
            raise ConfigError(f"data.boundary: {exc}") from exc

    def data_spec(self) -> DataSpec:
        try:
            return DataSpec(count=self["data.count"], boundary=self.boundary(),
                            clusters=self["data.clusters"],
                            cluster_spread=self["data.cluster_spread"],
                            background=self["data.background"], seed=self["data.seed"])
        except ValueError as exc:
            raise ConfigError(f"data: {exc}") from exc

    def workload_spec(self) -> WorkloadSpec:
        try:
            return WorkloadSpec(kind=self["workload.kind"], count=self["workload.count"],
                                centers=self["workload.centers"], radii=self["workload.radii"],
                                weights=self["workload.weights"],
                                size_min=self["workload.size_min"],
                                size_max=self["workload.size_max"], seed=self["workload.seed"])
        except ValueError as exc:
            raise ConfigError(f"workload: {exc}") from exc


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def load(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> Config:
    """Defaults, then the file (``path`` or $SKEWJOIN_CONFIG), then overrides."""
    path = path or os.environ.get(ENV_VAR) or None
    cfg = Config()
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg.update(parse_text(text, str(path)))
    if overrides:
        cfg.update(overrides)
    return cfg


def parse_overrides(args: Sequence[str]) -> dict[str, str]:
    """``["--engine.workers", "8", "--cost.mode=analytic"]`` -> dict."""
    out = {}
    i = 0
    while i < len(args):
        a = args[i]
        if not a.startswith("--"):
            raise ConfigError(f"unexpected argument {a!r}")
        if "=" in a:
            key, value = a[2:].split("=", 1)
        else:
            if i + 1 >= len(args):
                raise ConfigError(f"missing value for {a}")
            key, value = a[2:], args[i + 1]
            i += 1
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
        i += 1
    return out
