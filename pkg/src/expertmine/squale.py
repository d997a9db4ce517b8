"""Squale marks: threshold-bounded individual marks on [0, 3] and the weighted global mark."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .errors import ConfigError, EmptyMarks, UnknownMetric

MARK_MIN = 0.0
MARK_MAX = 3.0

SOFT, MEDIUM, HARD = 3.0, 9.0, 30.0
DEFAULT_LAMBDA = MEDIUM

FORMULAS: dict[str, Callable[[float], float]] = {
    "cc": lambda v: 2.0 ** ((7.0 - v) / 3.5),
    "hv": lambda v: 3.0 - 3.0 * v / 1000.0,
    "hd": lambda v: 3.0 - 3.0 * v / 50.0,
    "Ca": lambda v: 2.0 ** ((30.0 - v) / 7.0),
    "Ce": lambda v: 2.0 ** ((10.0 - v) / 2.0),
}


@dataclass(frozen=True)
class Threshold:
    metric: str
    formula: str
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if self.formula not in FORMULAS:
            raise ConfigError(f"unknown mark formula {self.formula!r}")
        if not self.lower < self.upper:
            raise ConfigError(f"{self.metric}: lower threshold must be below upper")

    def to_json(self) -> dict:
        return {"metric": self.metric, "formula": self.formula, "lower": self.lower, "upper": self.upper}


DEFAULT_THRESHOLDS = {
    "cc": Threshold("cc", "cc", 2, 19),
    "hv": Threshold("hv", "hv", 20, 1000),
    "hd": Threshold("hd", "hd", 10, 50),
    "Ca": Threshold("Ca", "Ca", 19, 60),
    "Ce": Threshold("Ce", "Ce", 6, 19),
}


@dataclass(frozen=True)
class SqualeConfig:
    lam: float = DEFAULT_LAMBDA
    thresholds: Mapping[str, Threshold] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def __post_init__(self) -> None:
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam) and self.lam > 1):
            raise ConfigError(f"lambda must be a real number > 1, got {self.lam!r}")

    def with_overrides(self, overrides: Iterable[Threshold]) -> "SqualeConfig":
        table = dict(self.thresholds)
        for t in overrides:
            table[t.metric] = t
        return SqualeConfig(self.lam, table)

    @property
    def metrics(self) -> tuple:
        return tuple(self.thresholds)


def _clamp(value: float) -> float:
    return min(MARK_MAX, max(MARK_MIN, value))


def individual_mark(metric_id: str, raw: float, config: Optional[SqualeConfig] = None) -> float:
    config = config or SqualeConfig()
    try:
        t = config.thresholds[metric_id]
    except KeyError:
        raise UnknownMetric(f"no threshold for metric {metric_id!r}") from None
    if not math.isfinite(raw):
        raise ValueError(f"raw value for {metric_id} must be finite")
    if raw < t.lower:
        return MARK_MAX
    if raw > t.upper:
        return MARK_MIN
    return _clamp(FORMULAS[t.formula](raw))


def individual_marks(values: Mapping[str, float], config: Optional[SqualeConfig] = None) -> dict[str, float]:
    """Marks for every metric present in ``values`` that has a threshold; others are skipped."""
    config = config or SqualeConfig()
    return {
        m: individual_mark(m, values[m], config)
        for m in config.thresholds
        if values.get(m) is not None
    }


def global_mark(marks: Iterable[float] | Mapping[str, float], config: Optional[SqualeConfig] = None) -> float:
    """-log_lambda of the mean of lambda**-mark.

    Computed relative to the lowest mark for precision; the result is kept
    within [min(marks), mean(marks)], which the exact value always satisfies.
    """
    config = config or SqualeConfig()
    values = list(marks.values()) if isinstance(marks, Mapping) else list(marks)
    if not values:
        raise EmptyMarks("global mark of an empty mark set")
    lo, hi = min(values), max(values)
    if lo == hi:
        return lo
    log_lam = math.log(config.lam)
    mean_weight = math.fsum(math.exp(-(v - lo) * log_lam) for v in values) / len(values)
    gm = max(lo, lo - math.log(mean_weight) / log_lam)
    mean = math.fsum(values) / len(values)
    if mean - gm > 2 * math.ulp(mean):
        return gm
    # within rounding distance of the mean: cap at the largest float not above the exact mean
    exact = sum(map(Fraction, values)) / len(values)
    cap = mean
    while Fraction(cap) > exact:
        cap = math.nextafter(cap, -math.inf)
    return min(gm, cap)


def pooled_marks(vectors: Iterable, config: Optional[SqualeConfig] = None) -> list[float]:
    """All individual marks of all given MetricVectors, flattened."""
    config = config or SqualeConfig()
    pooled: list[float] = []
    for vec in vectors:
        pooled.extend(individual_marks(vec.present(), config).values())
    return pooled


def component_mark(vectors: Iterable, config: Optional[SqualeConfig] = None,
                   metrics: Optional[Iterable[str]] = None) -> Optional[float]:
    """Global mark over all files' marks pooled together; None if there are no marks."""
    config = config or SqualeConfig()
    if metrics is not None:
        wanted = set(metrics)
        config = SqualeConfig(config.lam, {m: t for m, t in config.thresholds.items() if m in wanted})
    pooled = pooled_marks(vectors, config)
    if not pooled:
        return None
    return global_mark(pooled, config)
