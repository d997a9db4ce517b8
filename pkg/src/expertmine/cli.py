"""Command-line entry point: ``expertmine analyze|experts|timeseries|commit``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .components import glob_match
from .config import FORMATS, RunConfig, load_config, parse_time
from .errors import (
    BranchNotFound,
    ConfigError,
    ExpertmineError,
    MissingMetrics,
    RepositoryNotFound,
    StoreCorrupted,
    VcsToolFailure,
)
from .expertise import component_deltas, rank_experts, revisions_in_window, tally_deltas
from .pipeline import run_analysis
from .reports import (
    commit_report,
    dump_json,
    experts_csv,
    experts_json,
    metric_timeseries,
    timeseries_csv,
    timeseries_json,
    timeseries_svg,
)
from .store import Store

logger = logging.getLogger("expertmine")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_VCS = 3
EXIT_STORE = 4
EXIT_MISSING = 5


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--repo", help="repository path (overrides the config file)")
    p.add_argument("--store", help="analysis store directory")
    p.add_argument("--branch", help="branch to mine (default master, falling back to main)")
    p.add_argument("--window-days", type=int, help="expertise window length in days (default 62)")
    p.add_argument("--reference-time", help="window end as ISO 8601 (default: newest commit)")
    p.add_argument("--lambda", dest="lam", type=float, help="Squale weighting strength (default 9)")
    p.add_argument("--top-k", type=int, help="experts per component (default 3)")
    p.add_argument("--format", choices=FORMATS, help="output format")
    p.add_argument("--component", help="glob over component names")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="expertmine",
        description="Rank component experts from code-complexity deltas in a Git history.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    analyze = sub.add_parser("analyze", parents=[common], help="mine and analyze the branch")
    analyze.add_argument("--jobs", type=int, help="parallel file fetch workers")
    sub.add_parser("experts", parents=[common], help="rank experts per component")
    ts = sub.add_parser("timeseries", parents=[common], help="weekly metric deltas")
    ts.add_argument("--metrics", help="comma-separated subset of cc,hv,hd,Ca,Ce")
    commit = sub.add_parser("commit", parents=[common], help="per-file metric changes of one commit")
    commit.add_argument("revision", help="revision id or unique prefix")
    return parser


def effective_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.repo is not None:
        cfg.repository = args.repo
    if args.store is not None:
        cfg.store = args.store
    if args.branch is not None:
        cfg.branch = args.branch
    if args.window_days is not None:
        cfg.window_days = args.window_days
    if args.reference_time is not None:
        cfg.reference_time = parse_time(args.reference_time)
    if args.lam is not None:
        cfg.lam = args.lam
    if args.top_k is not None:
        cfg.top_k = args.top_k
    if args.format is not None:
        cfg.format = args.format
    if args.component is not None:
        cfg.component_glob = args.component
    if getattr(args, "metrics", None):
        cfg.metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if getattr(args, "jobs", None):
        cfg.jobs = args.jobs
    return cfg.validate()


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _echo_metadata(cfg: RunConfig) -> None:
    # CSV has nowhere to carry the run settings
    sys.stderr.write(json.dumps({"run": cfg.metadata()}, sort_keys=True) + "\n")


def cmd_analyze(cfg: RunConfig, args) -> int:
    summary = run_analysis(cfg.repo_ref(), cfg.store, cfg.analyzer(), cfg.aliases(), jobs=cfg.jobs)
    payload = {"schema_version": 1, "run": cfg.metadata(), "summary": summary.to_json()}
    _emit(dump_json(payload), args.output)
    return EXIT_OK


def _history(cfg: RunConfig):
    store = Store.open_existing(cfg.store)
    return store, store.history()


def cmd_experts(cfg: RunConfig, args) -> int:
    store, history = _history(cfg)
    cmap = cfg.component_map()
    window = cfg.window().resolved(history)
    meta = cfg.metadata()
    meta["reference_time"] = window.reference_time
    in_window = revisions_in_window(history, window)
    deltas = component_deltas(in_window, store, cmap, cfg.squale(), cfg.epsilon)

    components = set()
    if history:
        components = {cmap.component_of(p) for p in store.vectors_at(history[-1].id)}
    components |= {d.component for d in deltas}
    if cfg.component_glob:
        components = {c for c in components if glob_match(cfg.component_glob, c)}
        deltas = [d for d in deltas if d.component in components]

    rankings = rank_experts(tally_deltas(deltas), cfg.top_k, components)
    if cfg.format == "csv":
        _echo_metadata(cfg)
        _emit(experts_csv(rankings), args.output)
    elif cfg.format == "json":
        _emit(experts_json(rankings, meta), args.output)
    else:
        raise ConfigError("experts supports --format json or csv")
    return EXIT_OK


def cmd_timeseries(cfg: RunConfig, args) -> int:
    store, history = _history(cfg)
    buckets = metric_timeseries(
        history, store, cfg.component_map(), cfg.squale(), cfg.metrics, cfg.component_glob
    )
    if cfg.format == "csv":
        _echo_metadata(cfg)
        _emit(timeseries_csv(buckets, cfg.metrics), args.output)
    elif cfg.format == "svg":
        _emit(timeseries_svg(buckets, cfg.metrics, cfg.metadata()), args.output)
    else:
        _emit(timeseries_json(buckets, cfg.metrics, cfg.metadata()), args.output)
    return EXIT_OK


def cmd_commit(cfg: RunConfig, args) -> int:
    store, history = _history(cfg)
    matches = [r for r in history if r.id.startswith(args.revision)]
    if len(matches) != 1:
        raise ConfigError(
            f"revision {args.revision!r} is {'ambiguous' if matches else 'not in the analyzed history'}"
        )
    _emit(commit_report(matches[0], store, cfg.component_map(), cfg.squale(), cfg.metadata()), args.output)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "experts": cmd_experts,
    "timeseries": cmd_timeseries,
    "commit": cmd_commit,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        code, exc_ = EXIT_CONFIG, exc
    except (RepositoryNotFound, BranchNotFound, VcsToolFailure) as exc:
        code, exc_ = EXIT_VCS, exc
    except StoreCorrupted as exc:
        code, exc_ = EXIT_STORE, exc
    except MissingMetrics as exc:
        code, exc_ = EXIT_MISSING, exc
        print(f"expertmine: {exc}\nrun 'expertmine analyze' first", file=sys.stderr)
        return code
    except ExpertmineError as exc:
        code, exc_ = EXIT_FAILURE, exc
    print(f"expertmine: {exc_}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
