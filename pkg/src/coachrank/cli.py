"""Command-line entry point.

Exit codes: 0 success, 1 some seasons failed (see ``failures.json``),
2 fatal configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig
from .errors import CoachRankError, InvalidSpec
from .experiments import (
    SyntheticSpec,
    generate_synthetic,
    load_perturbations,
    sensitivity_run,
)
from .ingest import (
    AliasTable,
    CoachAssignment,
    GameRecord,
    build_season_dataset,
    format_coaches,
    format_games,
    parse_aliases,
    parse_coaches,
    parse_games,
    seasons_in,
)
from .model import rescaled_team_skills
from .network import CentralityVector, format_dot, format_graphml
from .pipeline import run_season, season_centrality
from .rank import YearlyRanking, career_values, format_career_csv, format_career_json, yearly_top_k

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2

log = logging.getLogger("coachrank")


def season_seed(seed: int, season: int) -> int:
    """Independent optimizer seed for one season, derived from the run seed."""
    state = np.random.SeedSequence([seed % (1 << 63), season]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


@dataclass
class Inputs:
    games: list[GameRecord]
    coaches: list[CoachAssignment]
    errors: list[CoachRankError]
    seasons: list[int]


def load_inputs(config: RunConfig) -> Inputs:
    """Parse every input file, collecting row errors instead of stopping."""
    errors: list[CoachRankError] = []
    aliases = parse_aliases(config.alias_path) if config.alias_path else AliasTable()
    games = parse_games(config.games_path, aliases, errors)
    coaches = parse_coaches(config.coaches_path, aliases, errors)
    present = seasons_in(games)
    seasons = list(config.seasons) if config.seasons is not None else present
    return Inputs(games, coaches, errors, seasons)


def _error_doc(exc: Exception, **extra) -> dict:
    doc = {"error": type(exc).__name__, "message": str(exc), **extra}
    line = getattr(exc, "line", None)
    if line is not None:
        doc["line"] = line
    return doc


# validate


def cmd_validate(config: RunConfig, args) -> int:
    inputs = load_inputs(config)
    present = set(seasons_in(inputs.games))
    report = {
        "errors": [_error_doc(e) for e in inputs.errors],
        "seasons": [],
        "missing_seasons": [s for s in inputs.seasons if s not in present],
        "warnings": [],
    }
    for season in inputs.seasons:
        if season not in present:
            continue
        ds = build_season_dataset(inputs.games, inputs.coaches, season)
        report["seasons"].append(
            {
                "season": season,
                "games": len(ds.games),
                "teams": len(ds.teams),
                "coached_teams": len(ds.teams) - len(ds.unmatched_teams),
                "unmatched_teams": list(ds.unmatched_teams),
            }
        )
        if ds.unmatched_teams:
            report["warnings"].append(
                f"{season}: {len(ds.unmatched_teams)} team(s) without a coach "
                "keep coach skill 1.0"
            )
    sys.stdout.write(_dump_json(report))
    return EXIT_FATAL if report["errors"] else EXIT_OK


# rank


def _centrality_csv(centrality: CentralityVector, rescale: bool) -> str:
    skills = rescaled_team_skills(centrality, rescale)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "team", "centrality", "team_skill"])
    for i, (team, score) in enumerate(centrality.ranked(), 1):
        w.writerow([i, team, repr(score), repr(skills[team])])
    return buf.getvalue()


def _rank_one(task):
    """Worker: fit one season and render its files. Returns plain data only."""
    games, coaches, season, pipeline, k = task
    try:
        ds = build_season_dataset(games, coaches, season)
        result = run_season(ds, pipeline)
    except CoachRankError as exc:
        return season, None, _error_doc(exc, season=season)
    ranking = yearly_top_k(result.fit, k, season)
    season_doc = result.fit.to_dict()
    season_doc["top_k"] = ranking.to_dict()
    season_doc["unmatched_teams"] = list(ds.unmatched_teams)
    files = {
        f"season_{season}.json": _dump_json(season_doc),
        f"centrality_{season}.csv": _centrality_csv(result.centrality, pipeline.rescale),
        f"network_{season}.graphml": format_graphml(result.network, result.centrality),
    }
    return season, (ranking, files), None


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _season_tasks(config: RunConfig, inputs: Inputs, seed: int):
    for season in inputs.seasons:
        games = [g for g in inputs.games if g.season == season]
        coaches = [c for c in inputs.coaches if c.season == season]
        yield games, coaches, season, config.pipeline(season_seed(seed, season)), config.k


def cmd_rank(config: RunConfig, args) -> int:
    inputs = load_inputs(config)
    if inputs.errors:
        for e in inputs.errors:
            log.error("%s", e)
        return EXIT_FATAL
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.optimizer.seed
    tasks = list(_season_tasks(config, inputs, seed))
    rankings: list[YearlyRanking] = []
    failures = []
    for season, ok, failure in _map(_rank_one, tasks, args.jobs):
        if failure is not None:
            log.warning("season %s failed: %s", season, failure["message"])
            failures.append(failure)
            continue
        ranking, files = ok
        rankings.append(ranking)
        for name, text in files.items():
            _write(out / name, text)
    ranked = {r.season for r in rankings}
    # career years count only seasons that produced a ranking
    assignments = [c for c in inputs.coaches if c.season in ranked]
    records = career_values(rankings, assignments, config.k, config.min_years)
    _write(out / "career.csv", format_career_csv(records))
    _write(out / "career.json", format_career_json(records))
    _write(out / "failures.json", _dump_json(failures))
    log.info("ranked %d season(s), %d failure(s)", len(rankings), len(failures))
    return EXIT_PARTIAL if failures else EXIT_OK


# centrality


def _centrality_one(task):
    games, season, pipeline = task
    try:
        ds = build_season_dataset(games, [], season)
        network, centrality = season_centrality(ds, pipeline)
    except CoachRankError as exc:
        return season, None, _error_doc(exc, season=season)
    files = {
        f"centrality_{season}.csv": _centrality_csv(centrality, pipeline.rescale),
        f"network_{season}.graphml": format_graphml(network, centrality),
        f"network_{season}.dot": format_dot(network, centrality),
    }
    return season, files, None


def cmd_centrality(config: RunConfig, args) -> int:
    inputs = load_inputs(config)
    if inputs.errors:
        for e in inputs.errors:
            log.error("%s", e)
        return EXIT_FATAL
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    pipeline = config.pipeline()
    tasks = [
        ([g for g in inputs.games if g.season == s], s, pipeline) for s in inputs.seasons
    ]
    failures = []
    for season, files, failure in _map(_centrality_one, tasks, args.jobs):
        if failure is not None:
            failures.append(failure)
            continue
        for name, text in files.items():
            _write(out / name, text)
    _write(out / "failures.json", _dump_json(failures))
    return EXIT_PARTIAL if failures else EXIT_OK


# sensitivity


def cmd_sensitivity(config: RunConfig, args) -> int:
    inputs = load_inputs(config)
    if inputs.errors:
        for e in inputs.errors:
            log.error("%s", e)
        return EXIT_FATAL
    try:
        perturbations = load_perturbations(args.perturbation)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        log.error("cannot read perturbations: %s", exc)
        return EXIT_FATAL
    seed = args.seed if args.seed is not None else config.optimizer.seed
    reports = []
    baselines: dict[int, tuple] = {}
    for p in perturbations:
        if p.season not in baselines:
            ds = build_season_dataset(inputs.games, inputs.coaches, p.season)
            pipeline = config.pipeline(season_seed(seed, p.season))
            baselines[p.season] = (ds, pipeline, run_season(ds, pipeline).fit)
        ds, pipeline, base = baselines[p.season]
        coach = args.coach or max(base.skills.skills, key=lambda c: (base.skills[c], c))
        if coach not in base.skills:
            log.error("coach %r has no fitted skill in %s", coach, p.season)
            return EXIT_FATAL
        reports.append(sensitivity_run(ds, p, coach, pipeline, baseline=base).to_dict())
    text = _dump_json(reports[0] if len(reports) == 1 else reports)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# synth


def cmd_synth(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        spec = SyntheticSpec.from_dict(doc)
    except (OSError, json.JSONDecodeError, InvalidSpec) as exc:
        log.error("invalid synthetic spec: %s", exc)
        return EXIT_FATAL
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    dataset, truth = generate_synthetic(spec)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "games.csv", format_games(dataset.games))
    _write(out / "coaches.csv", format_coaches(dataset.coaches))
    _write(out / "truth.json", _dump_json(truth.to_dict()))
    # a run config that fits with the generating model
    run = {
        "games_path": "games.csv",
        "coaches_path": "coaches.csv",
        "seasons": [spec.season],
        "model": spec.params.to_dict(),
        "min_years": 1,
        "output_dir": "out",
    }
    _write(out / "config.json", _dump_json(run))
    return EXIT_OK


# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coachrank",
        description="Rank coaches from game results via team centrality and a margin model.",
    )
    parser.add_argument("--config", help="run configuration JSON")
    parser.add_argument("--seed", type=int, help="override the optimizer seed")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for seasons")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="parse inputs and report problems")
    sub.add_parser("rank", help="fit every season and write rankings")
    sub.add_parser("centrality", help="write centrality and network files only")
    sens = sub.add_parser("sensitivity", help="refit after deleting or flipping a game")
    sens.add_argument("perturbation", help="JSON perturbation (or list of them)")
    sens.add_argument("--coach", help="coach to follow; default is the season's top coach")
    sens.add_argument("--output", help="report path; default stdout")
    synth = sub.add_parser("synth", help="generate a synthetic season")
    synth.add_argument("spec", help="synthetic spec JSON")
    synth.add_argument("output_dir")
    return parser


_CONFIG_COMMANDS = {
    "validate": cmd_validate,
    "rank": cmd_rank,
    "centrality": cmd_centrality,
    "sensitivity": cmd_sensitivity,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if args.jobs < 1:
        log.error("--jobs must be >= 1")
        return EXIT_FATAL
    if args.command == "synth":
        return cmd_synth(args)
    if not args.config:
        log.error("%s needs --config", args.command)
        return EXIT_FATAL
    try:
        config = RunConfig.load(args.config)
        return _CONFIG_COMMANDS[args.command](config, args)
    except CoachRankError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
