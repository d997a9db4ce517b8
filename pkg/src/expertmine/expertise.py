"""Quality-impact attribution and expert ranking per component."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .components import ComponentMap
from .miner import RENAMED, RevisionRecord
from .squale import SqualeConfig, component_mark

SECONDS_PER_DAY = 86400
DEFAULT_WINDOW_DAYS = 62
EPSILON = 1e-9
BIRTH_THRESHOLD = 1.5

INCREASE = "increase"
DECREASE = "decrease"
NEUTRAL = "neutral"


@dataclass(frozen=True)
class ExpertiseWindow:
    """Half-open interval (reference_time - duration, reference_time]."""

    reference_time: Optional[int] = None
    duration_days: int = DEFAULT_WINDOW_DAYS

    def __post_init__(self) -> None:
        if int(self.duration_days) != self.duration_days or self.duration_days < 1:
            raise ValueError("duration_days must be a positive integer")

    def resolved(self, revisions: Sequence[RevisionRecord]) -> "ExpertiseWindow":
        """Fill in the reference time from the newest revision when unset."""
        if self.reference_time is not None or not revisions:
            return self
        return ExpertiseWindow(max(r.timestamp for r in revisions), self.duration_days)

    @property
    def start(self) -> int:
        return self.reference_time - self.duration_days * SECONDS_PER_DAY

    def contains(self, timestamp: int) -> bool:
        return self.start < timestamp <= self.reference_time


def revisions_in_window(revisions: Iterable[RevisionRecord], window: ExpertiseWindow) -> list[RevisionRecord]:
    revisions = list(revisions)
    window = window.resolved(revisions)
    if window.reference_time is None:
        return []
    return [r for r in revisions if window.contains(r.timestamp)]


def commits_in_window(revisions: Iterable[RevisionRecord], window: ExpertiseWindow, author: str) -> list[RevisionRecord]:
    return [r for r in revisions_in_window(revisions, window) if r.author == author]


@dataclass(frozen=True)
class QualityImpactTally:
    author: str
    component: str
    increases: int = 0
    decreases: int = 0
    total_commits: int = 0

    def to_json(self) -> dict:
        return {
            "increases": self.increases,
            "decreases": self.decreases,
            "total_commits": self.total_commits,
        }


@dataclass(frozen=True)
class ComponentDelta:
    """Global mark of one component before and after one revision."""

    revision_id: str
    author: str
    timestamp: int
    component: str
    before: Optional[float]
    after: Optional[float]
    direction: str


def classify(before: Optional[float], after: Optional[float], epsilon: float = EPSILON,
             birth_threshold: float = BIRTH_THRESHOLD) -> str:
    if after is None:
        return NEUTRAL
    if before is None:
        return INCREASE if after >= birth_threshold else DECREASE
    if after - before > epsilon:
        return INCREASE
    if before - after > epsilon:
        return DECREASE
    return NEUTRAL


def touched_paths(revision: RevisionRecord) -> set[str]:
    paths = set()
    for change in revision.changed_files:
        paths.add(change.path)
        if change.kind == RENAMED and change.old_path:
            paths.add(change.old_path)
    return paths


def component_deltas(
    revisions: Iterable[RevisionRecord],
    store,
    component_map: ComponentMap,
    config: Optional[SqualeConfig] = None,
    epsilon: float = EPSILON,
) -> list[ComponentDelta]:
    """Before/after component marks for every component a revision touches.

    A component counts as touched when the revision changes at least one file
    that is analyzable on either side of the change. ``store`` needs a
    ``vectors_at(revision_id)`` method mapping paths to MetricVectors.
    """
    config = config or SqualeConfig()
    out = []
    for rev in revisions:
        before = store.vectors_at(rev.parent_id)
        after = store.vectors_at(rev.id)
        components = sorted({
            component_map.component_of(p) for p in touched_paths(rev) if p in before or p in after
        })
        for comp in components:
            gm_before = component_mark(
                [v for p, v in before.items() if component_map.component_of(p) == comp], config)
            gm_after = component_mark(
                [v for p, v in after.items() if component_map.component_of(p) == comp], config)
            out.append(ComponentDelta(
                rev.id, rev.author, rev.timestamp, comp, gm_before, gm_after,
                classify(gm_before, gm_after, epsilon),
            ))
    return out


def tally_deltas(deltas: Iterable[ComponentDelta]) -> list[QualityImpactTally]:
    counts: dict[tuple[str, str], list[int]] = {}
    for d in deltas:
        c = counts.setdefault((d.component, d.author), [0, 0, 0])
        if d.direction == INCREASE:
            c[0] += 1
        elif d.direction == DECREASE:
            c[1] += 1
        c[2] += 1
    return [
        QualityImpactTally(author, comp, inc, dec, total)
        for (comp, author), (inc, dec, total) in sorted(counts.items())
    ]


def attribute_deltas(
    revisions: Iterable[RevisionRecord],
    store,
    component_map: ComponentMap,
    config: Optional[SqualeConfig] = None,
    epsilon: float = EPSILON,
) -> list[QualityImpactTally]:
    """Per-(author, component) counts of mark-raising and mark-lowering commits."""
    return tally_deltas(component_deltas(revisions, store, component_map, config, epsilon))


def quality_impact(tally: QualityImpactTally) -> float:
    if tally.decreases == 0:
        return 1.0
    return min(tally.increases / tally.decreases, 1.0)


def expertise_score(tally: QualityImpactTally) -> float:
    return quality_impact(tally) * math.log1p(tally.total_commits)


@dataclass(frozen=True)
class RankedExpert:
    author: str
    score: float
    qi: float
    tally: QualityImpactTally


@dataclass
class ExpertRanking:
    component: str
    entries: list = field(default_factory=list)


def _rank_key(e: RankedExpert):
    return (-e.score, -e.tally.total_commits, e.author)


def rank_experts(
    tallies: Iterable[QualityImpactTally],
    top_k: Optional[int] = 3,
    components: Iterable[str] = (),
) -> list[ExpertRanking]:
    """Rank authors per component; ``components`` lists names to report even when empty."""
    grouped: dict[str, list[RankedExpert]] = {c: [] for c in components}
    for t in tallies:
        grouped.setdefault(t.component, [])
        score = expertise_score(t)
        if score > 0:
            grouped[t.component].append(RankedExpert(t.author, score, quality_impact(t), t))
    rankings = []
    for comp in sorted(grouped):
        entries = sorted(grouped[comp], key=_rank_key)
        if top_k is not None:
            entries = entries[:top_k]
        rankings.append(ExpertRanking(comp, entries))
    return rankings
