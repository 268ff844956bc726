"""File formats, synthetic data and query workload generation."""
from __future__ import annotations

import logging
import math
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from skewjoin.geometry import Point, Rect

log = logging.getLogger(__name__)

MAX_BAD_FRACTION = 0.10
KINDS = ("uniform", "hotspot")


class DataError(ValueError):
    """Input data that cannot be used (unreadable, empty, too many bad lines)."""


def _parse_lines(path: str | Path, n_fields: int, build, allow_extra: bool):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    items, bad, total = [], 0, 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        total += 1
        parts = line.split(",", n_fields) if allow_extra else line.split(",")
        if len(parts) < n_fields or (not allow_extra and len(parts) != n_fields):
            bad += 1
            log.debug("%s:%d: expected %d fields", path, lineno, n_fields)
            continue
        try:
            items.append(build(parts))
        except ValueError as exc:
            bad += 1
            log.debug("%s:%d: %s", path, lineno, exc)
    if total == 0:
        raise DataError(f"{path}: no records")
    if bad > MAX_BAD_FRACTION * total:
        raise DataError(f"{path}: {bad} of {total} lines malformed")
    if bad:
        log.warning("%s: skipped %d malformed line(s) of %d", path, bad, total)
    return items, bad


def _point(parts: list[str]) -> Point:
    payload = parts[3].encode("utf-8") if len(parts) > 3 else b""
    return Point(float(parts[1]), float(parts[2]), int(parts[0]), payload)


def ingest(path: str | Path, fmt: str = "csv") -> tuple[list[Point], int]:
    """Read ``id,x,y[,payload]`` lines; returns points and the bad-line count."""
    if fmt != "csv":
        raise ValueError(f"unsupported format {fmt!r}")
    return _parse_lines(path, 3, _point, allow_extra=True)


def read_range_queries(path: str | Path) -> tuple[list[int], list[Rect]]:
    items, _ = _parse_lines(
        path, 5, lambda p: (int(p[0]), Rect(*(float(v) for v in p[1:]))), allow_extra=False)
    return [i for i, _ in items], [r for _, r in items]


def read_knn_queries(path: str | Path) -> list[Point]:
    items, _ = _parse_lines(path, 3, lambda p: Point(float(p[1]), float(p[2]), int(p[0])),
                            allow_extra=False)
    return items


def _fmt(v: float) -> str:
    return repr(float(v))


def write_points(path: str | Path, points: Iterable[Point]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in points:
            row = [str(p.id), _fmt(p.x), _fmt(p.y)]
            if p.payload:
                row.append(p.payload.decode("utf-8"))
            fh.write(",".join(row) + "\n")


def write_range_queries(path: str | Path, queries: Sequence[Rect],
                        ids: Sequence[int] | None = None) -> None:
    ids = range(len(queries)) if ids is None else ids
    with open(path, "w", encoding="utf-8") as fh:
        for i, q in zip(ids, queries):
            coords = (q.min_x, q.min_y, q.max_x, q.max_y)
            fh.write(",".join([str(i)] + [_fmt(v) for v in coords]) + "\n")


def write_knn_queries(path: str | Path, points: Sequence[Point]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in points:
            fh.write(f"{p.id},{_fmt(p.x)},{_fmt(p.y)}\n")


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "uniform"
    count: int = 1000
    centers: tuple[tuple[float, float], ...] = ()
    radii: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    size_min: float = 0.0  # range side length, as a fraction of the boundary side
    size_max: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 <= self.size_min <= self.size_max:
            raise ValueError("need 0 <= size_min <= size_max")
        if self.kind == "hotspot":
            n = len(self.centers)
            if n == 0 or len(self.radii) != n or len(self.weights) != n:
                raise ValueError("hotspot needs matching centers, radii and weights")
            if any(r < 0 for r in self.radii) or any(w < 0 for w in self.weights):
                raise ValueError("radii and weights must be non-negative")
            if not math.isclose(sum(self.weights), 1.0, abs_tol=1e-9):
                raise ValueError("hotspot weights must sum to 1")


def _centers(spec: WorkloadSpec, boundary: Rect, rng: random.Random) -> list[tuple[float, float]]:
    out = []
    for _ in range(spec.count):
        if spec.kind == "uniform":
            out.append((rng.uniform(boundary.min_x, boundary.max_x),
                        rng.uniform(boundary.min_y, boundary.max_y)))
            continue
        h = rng.choices(range(len(spec.centers)), weights=spec.weights)[0]
        (cx, cy), r = spec.centers[h], spec.radii[h]
        # uniform in the disc
        rho = r * math.sqrt(rng.random())
        phi = rng.uniform(0, 2 * math.pi)
        out.append((cx + rho * math.cos(phi), cy + rho * math.sin(phi)))
    return out


def hotspot_of(spec: WorkloadSpec, x: float, y: float) -> int | None:
    for i, ((cx, cy), r) in enumerate(zip(spec.centers, spec.radii)):
        if (x - cx) ** 2 + (y - cy) ** 2 <= r * r * (1 + 1e-12):
            return i
    return None


def gen_workload(spec: WorkloadSpec, boundary: Rect) -> list[Rect]:
    """Square range queries centred per ``spec``; deterministic per seed."""
    rng = random.Random(spec.seed)
    side = max(boundary.width, boundary.height)
    out = []
    for cx, cy in _centers(spec, boundary, rng):
        half = rng.uniform(spec.size_min, spec.size_max) * side / 2
        out.append(Rect(cx - half, cy - half, cx + half, cy + half))
    return out


def gen_knn_workload(spec: WorkloadSpec, boundary: Rect, first_id: int = 0) -> list[Point]:
    rng = random.Random(spec.seed)
    return [Point(x, y, first_id + i) for i, (x, y) in enumerate(_centers(spec, boundary, rng))]


@dataclass(frozen=True)
class DataSpec:
    """Synthetic point set: uniform background plus Gaussian clusters."""

    count: int = 10_000
    boundary: Rect = field(default_factory=lambda: Rect(0.0, 0.0, 1000.0, 1000.0))
    clusters: int = 0
    cluster_spread: float = 0.03  # std-dev as a fraction of the boundary side
    background: float = 1.0  # share of points drawn uniformly
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 <= self.background <= 1:
            raise ValueError("background must be in [0, 1]")
        if self.background < 1 and self.clusters < 1:
            raise ValueError("clustered data needs clusters >= 1")


def gen_points(spec: DataSpec) -> list[Point]:
    rng = random.Random(spec.seed)
    b = spec.boundary
    side = max(b.width, b.height)
    centers = [(rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y))
               for _ in range(spec.clusters)]
    pts = []
    for i in range(spec.count):
        if not centers or rng.random() < spec.background:
            x, y = rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y)
        else:
            cx, cy = centers[rng.randrange(len(centers))]
            x = min(max(rng.gauss(cx, spec.cluster_spread * side), b.min_x), b.max_x)
            y = min(max(rng.gauss(cy, spec.cluster_spread * side), b.min_y), b.max_y)
        pts.append(Point(x, y, i))
    return pts
