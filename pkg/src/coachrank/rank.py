"""Yearly top-k lists and career values.

A coach's career value is the share of their coached seasons in which they
made the yearly top-k: ``value = n_appearances / n_years``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ingest import CoachAssignment
from .optimize import FitResult

DEFAULT_K = 5
DEFAULT_MIN_YEARS = 5
CAREER_HEADER = ("rank", "coach", "value", "n_appearances", "n_years")


@dataclass(frozen=True)
class YearlyRanking:
    season: int
    entries: tuple[tuple[str, float], ...]
    # True when two listed coaches had bit-identical skills and the
    # order between them came from the coach id
    tie_broken: bool = False

    @property
    def coaches(self) -> list[str]:
        return [c for c, _ in self.entries]

    def to_dict(self) -> dict:
        return {
            "season": self.season,
            "tie_broken": self.tie_broken,
            "entries": [{"coach": c, "skill": s} for c, s in self.entries],
        }


@dataclass(frozen=True)
class CareerRecord:
    coach: str
    n_appearances: int
    n_years: int

    def __post_init__(self):
        if not 0 <= self.n_appearances <= self.n_years or self.n_years < 1:
            raise ValueError(
                f"need 0 <= n_appearances <= n_years and n_years >= 1 for {self.coach!r}"
            )

    @property
    def value(self) -> float:
        return self.n_appearances / self.n_years

    def to_dict(self) -> dict:
        return {
            "coach": self.coach,
            "value": self.value,
            "n_appearances": self.n_appearances,
            "n_years": self.n_years,
        }


def yearly_top_k(fit: FitResult, k: int = DEFAULT_K, season: int | None = None) -> YearlyRanking:
    if k < 1:
        raise ValueError("k must be >= 1")
    skills = fit.skills.skills
    if not skills:
        raise ValueError("fit has no coaches")
    ordered = sorted(skills.items(), key=lambda kv: (-kv[1], kv[0]))
    top = tuple(ordered[:k])
    # a tie at the cut-off also decides who is listed, so look one past it
    window = ordered[: k + 1]
    tie = any(a[1] == b[1] for a, b in zip(window, window[1:]))
    if season is None:
        season = fit.season
    return YearlyRanking(season=season, entries=top, tie_broken=tie)


def career_values(
    rankings: Iterable[YearlyRanking],
    assignments: Iterable[CoachAssignment],
    k: int = DEFAULT_K,
    min_years: int = DEFAULT_MIN_YEARS,
) -> list[CareerRecord]:
    """Career records for every coach with at least ``min_years`` seasons.

    ``n_years`` counts distinct seasons in which the coach holds any
    assignment, whatever the team. ``n_appearances`` counts seasons in which
    the coach is among a ranking's first ``k`` entries. Sorted by value, then
    ``n_years`` (both descending), then coach id.
    """
    if k < 1 or min_years < 1:
        raise ValueError("k and min_years must be >= 1")
    years: dict[str, set[int]] = {}
    for a in assignments:
        years.setdefault(a.coach, set()).add(a.season)
    hits: dict[str, set[int]] = {}
    for r in rankings:
        for coach, _ in r.entries[:k]:
            hits.setdefault(coach, set()).add(r.season)
    records = [
        CareerRecord(coach, len(hits.get(coach, set()) & seasons), len(seasons))
        for coach, seasons in years.items()
        if len(seasons) >= min_years
    ]
    records.sort(key=lambda r: (-r.value, -r.n_years, r.coach))
    return records


def format_career_csv(records: Sequence[CareerRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CAREER_HEADER)
    for i, r in enumerate(records, 1):
        w.writerow([i, r.coach, repr(r.value), r.n_appearances, r.n_years])
    return buf.getvalue()


def format_career_json(records: Sequence[CareerRecord]) -> str:
    rows = [{"rank": i, **r.to_dict()} for i, r in enumerate(records, 1)]
    return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"
