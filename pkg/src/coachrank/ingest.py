"""Flat-file ingestion: games, coach rosters and the team-name alias table.

All three inputs are UTF-8 CSV files with a fixed header. Blank lines and
lines whose first non-blank character is ``#`` are ignored.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    AliasChain,
    DuplicateAssignment,
    EmptySeason,
    MalformedRow,
    MissingFile,
    TieGame,
)

GAMES_HEADER = ("season", "date", "team_a", "score_a", "team_b", "score_b")
COACHES_HEADER = ("season", "team", "coach")
ALIASES_HEADER = ("raw", "canonical")

FIRST_SEASON = 1869


@dataclass(frozen=True)
class GameRecord:
    season: int
    team_a: str
    team_b: str
    score_a: int
    score_b: int
    date: _dt.date | None = None

    def __post_init__(self):
        if self.team_a == self.team_b:
            raise ValueError(f"team {self.team_a!r} cannot play itself")
        if self.score_a < 0 or self.score_b < 0:
            raise ValueError("scores must be non-negative")
        if self.score_a == self.score_b:
            raise ValueError("tie games are not representable")

    @property
    def margin(self) -> int:
        """Signed margin, positive when ``team_a`` won."""
        return self.score_a - self.score_b

    @property
    def winner(self) -> str:
        return self.team_a if self.score_a > self.score_b else self.team_b

    @property
    def loser(self) -> str:
        return self.team_b if self.score_a > self.score_b else self.team_a

    def sort_key(self):
        return (
            self.team_a,
            self.team_b,
            self.date is not None,
            self.date or _dt.date.min,
            self.score_a,
            self.score_b,
        )


@dataclass(frozen=True)
class CoachAssignment:
    season: int
    team: str
    coach: str


@dataclass(frozen=True)
class AliasTable:
    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        entries = dict(self.entries)
        for raw, canonical in entries.items():
            target = entries.get(canonical)
            if target is not None and target != canonical:
                raise AliasChain(raw, canonical)
        object.__setattr__(self, "entries", entries)

    def canonical(self, name: str) -> str:
        return self.entries.get(name, name)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SeasonDataset:
    season: int
    games: tuple[GameRecord, ...]
    coaches: tuple[CoachAssignment, ...]
    unmatched_teams: tuple[str, ...]

    @property
    def teams(self) -> list[str]:
        seen = set()
        for g in self.games:
            seen.add(g.team_a)
            seen.add(g.team_b)
        return sorted(seen)

    def coach_map(self) -> dict[str, str]:
        """team -> coach for this season."""
        return {c.team: c.coach for c in self.coaches}


def _iter_rows(path, header: Sequence[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for every data row of a CSV file."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    text = path.read_text(encoding="utf-8-sig")
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        fields = [f.strip() for f in fields]
        if not seen_header:
            if tuple(fields) != tuple(header):
                raise MalformedRow(
                    lineno, f"expected header {','.join(header)!r}, got {line!r}"
                )
            seen_header = True
            continue
        if len(fields) != len(header):
            raise MalformedRow(
                lineno, f"expected {len(header)} fields, got {len(fields)}"
            )
        yield lineno, fields
    if not seen_header:
        raise MalformedRow(0, f"missing header {','.join(header)!r}")


def _parse_int(value: str, lineno: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedRow(lineno, f"{what} is not an integer: {value!r}") from None


def _check_season(season: int, lineno: int) -> None:
    last = _dt.date.today().year
    if not FIRST_SEASON <= season <= last:
        raise MalformedRow(
            lineno, f"season {season} outside [{FIRST_SEASON}, {last}]"
        )


def _parse_game(lineno: int, fields: list[str], aliases: AliasTable) -> GameRecord:
    season_s, date_s, team_a, score_a_s, team_b, score_b_s = fields
    season = _parse_int(season_s, lineno, "season")
    _check_season(season, lineno)
    date = None
    if date_s:
        try:
            date = _dt.date.fromisoformat(date_s)
        except ValueError:
            raise MalformedRow(lineno, f"bad ISO date {date_s!r}") from None
    if not team_a or not team_b:
        raise MalformedRow(lineno, "empty team name")
    team_a = aliases.canonical(team_a)
    team_b = aliases.canonical(team_b)
    if team_a == team_b:
        raise MalformedRow(lineno, f"team {team_a!r} plays itself")
    score_a = _parse_int(score_a_s, lineno, "score_a")
    score_b = _parse_int(score_b_s, lineno, "score_b")
    if score_a < 0 or score_b < 0:
        raise MalformedRow(lineno, "negative score")
    if score_a == score_b:
        raise TieGame(lineno)
    return GameRecord(season, team_a, team_b, score_a, score_b, date)


def parse_aliases(path) -> AliasTable:
    entries: dict[str, str] = {}
    for lineno, (raw, canonical) in _iter_rows(path, ALIASES_HEADER):
        if not raw or not canonical:
            raise MalformedRow(lineno, "empty alias field")
        if raw in entries and entries[raw] != canonical:
            raise MalformedRow(lineno, f"conflicting aliases for {raw!r}")
        entries[raw] = canonical
    return AliasTable(entries)


def parse_games(
    path, aliases: AliasTable | None = None, errors: list | None = None
) -> list[GameRecord]:
    """Parse a games CSV.

    Row-level problems (:class:`MalformedRow`, :class:`TieGame`) raise on the
    first offending row unless an ``errors`` list is supplied, in which case
    each error is appended to it and the row is left out of the result.
    Header problems always raise.
    """
    aliases = aliases or AliasTable()
    records = []
    for lineno, fields in _iter_rows(path, GAMES_HEADER):
        try:
            records.append(_parse_game(lineno, fields, aliases))
        except MalformedRow as exc:
            if errors is None:
                raise
            errors.append(exc)
    return records


def parse_coaches(
    path, aliases: AliasTable | None = None, errors: list | None = None
) -> list[CoachAssignment]:
    aliases = aliases or AliasTable()
    out = []
    seen: set[tuple[int, str]] = set()
    for lineno, (season_s, team, coach) in _iter_rows(path, COACHES_HEADER):
        try:
            season = _parse_int(season_s, lineno, "season")
            _check_season(season, lineno)
            if not team or not coach:
                raise MalformedRow(lineno, "empty team or coach")
            team = aliases.canonical(team)
            coach = aliases.canonical(coach)
            if (season, team) in seen:
                raise DuplicateAssignment(season, team, lineno)
        except (MalformedRow, DuplicateAssignment) as exc:
            if errors is None:
                raise
            errors.append(exc)
            continue
        seen.add((season, team))
        out.append(CoachAssignment(season, team, coach))
    return out


def build_season_dataset(
    games: Iterable[GameRecord], coaches: Iterable[CoachAssignment], season: int
) -> SeasonDataset:
    season_games = sorted(
        (g for g in games if g.season == season), key=GameRecord.sort_key
    )
    if not season_games:
        raise EmptySeason(season)
    season_coaches = sorted(
        (c for c in coaches if c.season == season), key=lambda c: (c.team, c.coach)
    )
    covered = {c.team for c in season_coaches}
    teams = {t for g in season_games for t in (g.team_a, g.team_b)}
    return SeasonDataset(
        season=season,
        games=tuple(season_games),
        coaches=tuple(season_coaches),
        unmatched_teams=tuple(sorted(teams - covered)),
    )


def seasons_in(games: Iterable[GameRecord]) -> list[int]:
    return sorted({g.season for g in games})


# Serialization to the canonical CSV layout.


def format_games(games: Iterable[GameRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GAMES_HEADER)
    for g in games:
        w.writerow(
            [
                g.season,
                g.date.isoformat() if g.date else "",
                g.team_a,
                g.score_a,
                g.team_b,
                g.score_b,
            ]
        )
    return buf.getvalue()


def format_coaches(coaches: Iterable[CoachAssignment]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COACHES_HEADER)
    for c in coaches:
        w.writerow([c.season, c.team, c.coach])
    return buf.getvalue()


def write_dataset(dataset: SeasonDataset, games_path, coaches_path) -> None:
    Path(games_path).write_text(format_games(dataset.games), encoding="utf-8")
    Path(coaches_path).write_text(format_coaches(dataset.coaches), encoding="utf-8")
