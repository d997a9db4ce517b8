"""Report emitters: expert rankings, weekly metric time series, commit detail.

CSV layouts are fixed:

* experts: ``component,rank,author,score,qi,increases,decreases,total_commits``
* timeseries: ``week,commit_count`` followed by ``delta_<metric>`` for each
  selected metric in the order cc, hv, hd, Ca, Ce

Numbers are written with ``repr`` so that every format round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from .components import ComponentMap, glob_match
from .expertise import ExpertRanking
from .miner import RevisionRecord
from .squale import SqualeConfig, component_mark

REPORT_SCHEMA_VERSION = 1

EXPERT_COLUMNS = ("component", "rank", "author", "score", "qi", "increases", "decreases", "total_commits")
SERIES_METRICS = ("cc", "hv", "hd", "Ca", "Ce")
DEFAULT_SERIES_METRICS = ("cc", "hv", "hd")

_SERIES_COLORS = {"cc": "#1f77b4", "hv": "#2ca02c", "hd": "#ff7f0e", "Ca": "#9467bd", "Ce": "#8c564b"}


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _num(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


# -- experts ---------------------------------------------------------------

def expert_rows(rankings: Iterable[ExpertRanking]) -> list[dict]:
    rows = []
    for ranking in rankings:
        for rank, e in enumerate(ranking.entries, start=1):
            rows.append({
                "component": ranking.component,
                "rank": rank,
                "author": e.author,
                "score": e.score,
                "qi": e.qi,
                "increases": e.tally.increases,
                "decreases": e.tally.decreases,
                "total_commits": e.tally.total_commits,
            })
    return rows


def experts_json(rankings: Sequence[ExpertRanking], metadata: dict) -> str:
    components = []
    for ranking in rankings:
        components.append({
            "component": ranking.component,
            "experts": [
                {k: v for k, v in row.items() if k != "component"}
                for row in expert_rows([ranking])
            ],
        })
    return dump_json({"schema_version": REPORT_SCHEMA_VERSION, "run": metadata, "components": components})


def experts_csv(rankings: Sequence[ExpertRanking]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EXPERT_COLUMNS)
    for row in expert_rows(rankings):
        writer.writerow([_num(row[c]) for c in EXPERT_COLUMNS])
    return buf.getvalue()


# -- time series -----------------------------------------------------------

@dataclass
class WeekBucket:
    week: str
    commit_count: int
    deltas: dict


def iso_week(timestamp: int) -> tuple[int, int]:
    y, w, _ = datetime.fromtimestamp(timestamp, timezone.utc).isocalendar()
    return y, w


def _week_label(monday: date) -> str:
    y, w, _ = monday.isocalendar()
    return f"{y}-W{w:02d}"


def _monday(timestamp: int) -> date:
    d = datetime.fromtimestamp(timestamp, timezone.utc).date()
    return d - timedelta(days=d.weekday())


def _by_component(vectors: dict, component_map: ComponentMap, in_scope) -> dict[str, list]:
    grouped: dict[str, list] = {}
    for path, vec in vectors.items():
        comp = component_map.component_of(path)
        if in_scope(comp):
            grouped.setdefault(comp, []).append(vec)
    return grouped


def metric_timeseries(
    revisions: Sequence[RevisionRecord],
    store,
    component_map: ComponentMap,
    config: Optional[SqualeConfig] = None,
    metrics: Sequence[str] = DEFAULT_SERIES_METRICS,
    component_glob: Optional[str] = None,
) -> list[WeekBucket]:
    """Weekly sums of per-metric component global-mark deltas.

    For each revision and metric, the change of every in-scope component's
    global mark (restricted to that metric) is added up. A positive delta means
    the marks went up, i.e. quality improved. Components without marks on one
    side of a revision contribute nothing for it.
    """
    config = config or SqualeConfig()
    metrics = [m for m in SERIES_METRICS if m in metrics]

    def in_scope(comp: str) -> bool:
        return not component_glob or glob_match(component_glob, comp)

    if not revisions:
        return []

    per_week: dict[str, list] = {}
    for rev in revisions:
        label = _week_label(_monday(rev.timestamp))
        bucket = per_week.setdefault(label, [0, {m: [] for m in metrics}])
        bucket[0] += 1
        before = _by_component(store.vectors_at(rev.parent_id), component_map, in_scope)
        after = _by_component(store.vectors_at(rev.id), component_map, in_scope)
        for comp in sorted(set(before) & set(after)):
            if before[comp] == after[comp]:
                continue
            for m in metrics:
                gm_before = component_mark(before[comp], config, metrics=[m])
                gm_after = component_mark(after[comp], config, metrics=[m])
                if gm_before is not None and gm_after is not None:
                    bucket[1][m].append(gm_after - gm_before)

    first = _monday(min(r.timestamp for r in revisions))
    last = _monday(max(r.timestamp for r in revisions))
    buckets = []
    monday = first
    while monday <= last:
        label = _week_label(monday)
        count, deltas = per_week.get(label, [0, {m: [] for m in metrics}])
        buckets.append(WeekBucket(label, count, {m: math.fsum(deltas[m]) for m in metrics}))
        monday += timedelta(days=7)
    return buckets


def timeseries_csv(buckets: Sequence[WeekBucket], metrics: Sequence[str]) -> str:
    metrics = [m for m in SERIES_METRICS if m in metrics]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["week", "commit_count"] + [f"delta_{m}" for m in metrics])
    for b in buckets:
        writer.writerow([b.week, b.commit_count] + [_num(b.deltas[m]) for m in metrics])
    return buf.getvalue()


def timeseries_json(buckets: Sequence[WeekBucket], metrics: Sequence[str], metadata: dict) -> str:
    metrics = [m for m in SERIES_METRICS if m in metrics]
    return dump_json({
        "schema_version": REPORT_SCHEMA_VERSION,
        "run": metadata,
        "metrics": metrics,
        "buckets": [
            {"week": b.week, "commit_count": b.commit_count, "deltas": {m: b.deltas[m] for m in metrics}}
            for b in buckets
        ],
    })


def timeseries_svg(buckets: Sequence[WeekBucket], metrics: Sequence[str], metadata: Optional[dict] = None,
                   width: int = 900, height: int = 360) -> str:
    """Static chart: grey commit-count bars and one cumulative line per metric.

    Each metric line is scaled to its own range since the metrics are not
    comparable. Exact weekly values are carried in ``data-*`` attributes.
    """
    metrics = [m for m in SERIES_METRICS if m in metrics]
    margin_l, margin_r, margin_t, margin_b = 50, 110, 20, 50
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    n = max(len(buckets), 1)
    step = plot_w / n
    max_count = max((b.commit_count for b in buckets), default=0) or 1

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
    ]
    if metadata is not None:
        out.append(f"<metadata>{escape(json.dumps(metadata, sort_keys=True))}</metadata>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<g class="commits" transform="translate({margin_l},{margin_t})">')
    for i, b in enumerate(buckets):
        h = plot_h * 0.5 * b.commit_count / max_count
        out.append(
            f'<rect class="bar" x="{i * step + step * 0.15:.2f}" y="{plot_h - h:.2f}" '
            f'width="{step * 0.7:.2f}" height="{h:.2f}" fill="#c8c8c8" '
            f'data-week="{b.week}" data-commits="{b.commit_count}"/>'
        )
    out.append("</g>")

    for k, m in enumerate(metrics):
        cumulative = []
        total = 0.0
        for b in buckets:
            total += b.deltas[m]
            cumulative.append(total)
        lo, hi = min(cumulative + [0.0]), max(cumulative + [0.0])
        span = (hi - lo) or 1.0
        points = []
        for i, value in enumerate(cumulative):
            x = i * step + step / 2
            y = plot_h - (value - lo) / span * plot_h
            points.append((x, y))
        color = _SERIES_COLORS[m]
        out.append(f'<g class="series" data-metric="{m}" transform="translate({margin_l},{margin_t})">')
        if points:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for (x, y), b in zip(points, buckets):
            out.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{color}" '
                f'data-week="{b.week}" data-delta={quoteattr(_num(b.deltas[m]))}/>'
            )
        out.append("</g>")
        out.append(
            f'<text x="{width - margin_r + 10}" y="{margin_t + 14 + 16 * k}" fill="{color}">{m}</text>'
        )

    out.append(
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>'
    )
    for i, b in enumerate(buckets):
        if len(buckets) > 12 and i % max(1, len(buckets) // 12):
            continue
        out.append(
            f'<text x="{margin_l + i * step + step / 2:.2f}" y="{height - margin_b + 16}" '
            f'text-anchor="middle">{b.week}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- commit detail ---------------------------------------------------------

def commit_report(revision: RevisionRecord, store, component_map: ComponentMap,
                  config: Optional[SqualeConfig] = None, metadata: Optional[dict] = None) -> str:
    config = config or SqualeConfig()
    before = store.vectors_at(revision.parent_id)
    after = store.vectors_at(revision.id)
    files = []
    components = set()
    for change in revision.changed_files:
        old_path = change.old_path or change.path
        b = before.get(old_path)
        a = after.get(change.path) if change.kind != "deleted" else None
        if a is None and b is None:
            continue
        components.add(component_map.component_of(change.path))
        if change.old_path:
            components.add(component_map.component_of(change.old_path))
        entry = {
            "path": change.path,
            "change": change.kind,
            "before": b.to_json() if b else None,
            "after": a.to_json() if a else None,
        }
        if change.old_path:
            entry["old_path"] = change.old_path
        files.append(entry)
    comp_rows = []
    for comp in sorted(components):
        gm_b = component_mark([v for p, v in before.items() if component_map.component_of(p) == comp], config)
        gm_a = component_mark([v for p, v in after.items() if component_map.component_of(p) == comp], config)
        comp_rows.append({"component": comp, "before": gm_b, "after": gm_a})
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "revision": {
            "id": revision.id,
            "author": revision.author,
            "timestamp": revision.timestamp,
            "parent_id": revision.parent_id,
        },
        "files": files,
        "components": comp_rows,
    }
    if metadata is not None:
        payload["run"] = metadata
    return dump_json(payload)
