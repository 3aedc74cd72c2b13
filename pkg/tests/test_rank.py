import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coachrank.ingest import CoachAssignment
from coachrank.model import CoachSkillVector
from coachrank.optimize import FitResult
from coachrank.rank import (
    CAREER_HEADER,
    CareerRecord,
    YearlyRanking,
    career_values,
    format_career_csv,
    format_career_json,
    yearly_top_k,
)


def fit_of(skills, season=2000):
    return FitResult(CoachSkillVector(skills), 0.0, 1, True, 0, [0.0], season=season)


def test_fewer_coaches_than_k():
    r = yearly_top_k(fit_of({"b": 1.1, "a": 1.4, "c": 0.7}), k=5)
    assert r.entries == (("a", 1.4), ("b", 1.1), ("c", 0.7))
    assert not r.tie_broken


def test_exactly_k_entries():
    r = yearly_top_k(fit_of({f"c{i}": 1.0 + i / 10 for i in range(10)}), k=5)
    assert r.coaches == ["c9", "c8", "c7", "c6", "c5"]


def test_identical_skills_flagged():
    r = yearly_top_k(fit_of({"zed": 1.2, "amy": 1.2, "bob": 0.3}), k=5)
    assert r.coaches == ["amy", "zed", "bob"]
    assert r.tie_broken


def test_tie_just_past_cutoff_is_flagged():
    r = yearly_top_k(fit_of({"a": 2.0, "b": 1.0, "c": 1.0}), k=2)
    assert r.coaches == ["a", "b"] and r.tie_broken


def test_top_k_validation():
    with pytest.raises(ValueError):
        yearly_top_k(fit_of({"a": 1.0}), k=0)


def test_season_comes_from_fit():
    assert yearly_top_k(fit_of({"a": 1.0}, season=1999)).season == 1999
    assert yearly_top_k(fit_of({"a": 1.0}, season=1999), season=2001).season == 2001


def ranking(season, *coaches):
    return YearlyRanking(season, tuple((c, 10.0 - i) for i, c in enumerate(coaches)))


def test_three_of_ten_seasons():
    assignments = [CoachAssignment(2000 + y, "Team", "X") for y in range(10)]
    rankings = [ranking(2000 + y, "X" if y in (1, 4, 7) else "Y") for y in range(10)]
    (rec,) = career_values(rankings, assignments, k=5, min_years=5)
    assert (rec.n_appearances, rec.n_years, rec.value) == (3, 10, 0.3)


def test_never_ranked_still_listed():
    assignments = [CoachAssignment(2000 + y, "Team", "X") for y in range(6)]
    (rec,) = career_values([ranking(2000, "Y")], assignments, min_years=5)
    assert rec.value == 0.0 and rec.coach == "X"


def test_short_careers_excluded():
    assignments = [CoachAssignment(2000 + y, "Team", "X") for y in range(4)]
    assert career_values([ranking(2000, "X")], assignments, min_years=5) == []


def test_moving_coach_counts_both_teams():
    assignments = [CoachAssignment(2000 + y, "Butler" if y < 3 else "Kentucky", "X") for y in range(6)]
    rankings = [ranking(2001, "X"), ranking(2004, "X")]
    (rec,) = career_values(rankings, assignments, min_years=5)
    assert (rec.n_appearances, rec.n_years) == (2, 6)


def test_only_top_k_entries_count():
    assignments = [CoachAssignment(2000, "T", c) for c in "ABC"]
    recs = career_values([ranking(2000, "A", "B", "C")], assignments, k=2, min_years=1)
    assert {r.coach: r.n_appearances for r in recs} == {"A": 1, "B": 1, "C": 0}


def test_sort_order():
    assignments = (
        [CoachAssignment(2000 + y, "T1", "long") for y in range(4)]
        + [CoachAssignment(2000 + y, "T2", "short") for y in range(2)]
        + [CoachAssignment(2000 + y, "T3", "b-short") for y in range(2)]
    )
    rankings = [ranking(2000, "long", "short", "b-short"), ranking(2001, "long")]
    recs = career_values(rankings, assignments, k=3, min_years=1)
    # all three score 0.5; longer career first, then by id
    assert [r.coach for r in recs] == ["long", "b-short", "short"]


def test_career_record_invariants():
    with pytest.raises(ValueError):
        CareerRecord("x", 3, 2)
    with pytest.raises(ValueError):
        CareerRecord("x", 0, 0)


def test_csv_and_json_layout():
    recs = [CareerRecord("Mike Krzyzewski", 3, 10), CareerRecord("Coach, Jr.", 0, 5)]
    rows = list(csv.reader(io.StringIO(format_career_csv(recs))))
    assert tuple(rows[0]) == CAREER_HEADER == ("rank", "coach", "value", "n_appearances", "n_years")
    assert rows[1] == ["1", "Mike Krzyzewski", "0.3", "3", "10"]
    assert rows[2][1] == "Coach, Jr."
    doc = json.loads(format_career_json(recs))
    assert doc[0] == {"rank": 1, "coach": "Mike Krzyzewski", "value": 0.3, "n_appearances": 3, "n_years": 10}


COACHES = ["A", "B", "C", "D", "E", "F"]


@st.composite
def league_history(draw):
    seasons = range(2000, 2000 + draw(st.integers(1, 8)))
    assignments, rankings = [], []
    for s in seasons:
        active = draw(st.lists(st.sampled_from(COACHES), min_size=1, unique=True))
        teams = draw(st.permutations([f"T{i}" for i in range(len(COACHES))]))
        assignments += [CoachAssignment(s, teams[i], c) for i, c in enumerate(active)]
        order = draw(st.permutations(active))
        rankings.append(ranking(s, *order))
    return rankings, assignments


@settings(max_examples=100, deadline=None)
@given(league_history(), st.integers(1, 6))
def test_value_in_unit_interval(history, k):
    for rec in career_values(*history, k=k, min_years=1):
        assert 0.0 <= rec.value <= 1.0


@settings(max_examples=100, deadline=None)
@given(league_history(), st.integers(1, 5))
def test_larger_k_never_lowers_value(history, k):
    small = {r.coach: r.value for r in career_values(*history, k=k, min_years=1)}
    large = {r.coach: r.value for r in career_values(*history, k=k + 1, min_years=1)}
    assert all(large[c] >= v for c, v in small.items())


@settings(max_examples=100, deadline=None)
@given(league_history(), st.randoms(use_true_random=False))
def test_team_labels_do_not_matter(history, rnd):
    rankings, assignments = history
    relabeled = [CoachAssignment(a.season, f"X{rnd.randint(0, 99)}-{a.coach}", a.coach) for a in assignments]
    assert career_values(rankings, assignments, min_years=1) == career_values(
        rankings, relabeled, min_years=1
    )
