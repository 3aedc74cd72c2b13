"""Margin model linking team skill, coach skill and player skill.

Team skill factors as ``team = coach * player``. For a game between teams
``a`` and ``b`` the predicted signed margin (positive when ``a`` wins) is::

    w_player * (p_a - p_b) + w_coach * (c_a - c_b) / (1 + alpha * |p_a - p_b|)

and the likelihood weight of an observed margin ``m`` is
``amplitude * exp(-((predicted - m) / scale) ** 2)``. Maximizing the product
of those weights over a season is the same as minimizing the sum of squared
residuals ``predicted - m``.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingCoach, NonpositiveCoachSkill
from .network import CentralityVector

FIXED_COACH_SKILL = 1.0


@dataclass(frozen=True)
class SkillModelParams:
    alpha: float = 10.0
    w_player: float = 1.0
    w_coach: float = 1.0
    # None means "average absolute observed margin of the season"; see with_scale_for().
    scale: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")

    def with_scale_for(self, observations: Sequence["GameObservation"]):
        """Resolve an unset ``scale`` to the mean absolute margin."""
        if self.scale is not None:
            return self
        if not observations:
            return replace(self, scale=1.0)
        mean = sum(abs(o.margin) for o in observations) / len(observations)
        return replace(self, scale=float(mean))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SkillModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown model parameter(s): {sorted(unknown)}")
        return cls(**{k: (None if v is None else float(v)) for k, v in doc.items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SkillModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CoachSkillVector:
    skills: Mapping[str, float]

    def __post_init__(self):
        for coach, value in self.skills.items():
            if not value > 0:
                raise NonpositiveCoachSkill(value)

    def __getitem__(self, coach: str) -> float:
        return self.skills[coach]

    def __contains__(self, coach) -> bool:
        return coach in self.skills

    def __len__(self) -> int:
        return len(self.skills)


@dataclass(frozen=True)
class GameObservation:
    team_a: str
    team_b: str
    margin: int
    t_a: float
    t_b: float

    def __post_init__(self):
        if self.margin == 0:
            raise ValueError("margin must be nonzero")
        if not (self.t_a > 0 and self.t_b > 0):
            raise ValueError("team skills must be positive")


def player_skill(team_skill: float, coach_skill: float) -> float:
    if not coach_skill > 0:
        raise NonpositiveCoachSkill(coach_skill)
    return team_skill / coach_skill


def coach_effect(c_a: float, c_b: float, p_a: float, p_b: float, alpha: float) -> float:
    return (c_a - c_b) * (1.0 / (1.0 + alpha * abs(p_a - p_b)))


def predicted_margin(
    t_a: float, t_b: float, c_a: float, c_b: float, params: SkillModelParams
) -> float:
    p_a = player_skill(t_a, c_a)
    p_b = player_skill(t_b, c_b)
    return params.w_player * (p_a - p_b) + params.w_coach * coach_effect(
        c_a, c_b, p_a, p_b, params.alpha
    )


def margin_probability(
    obs: GameObservation, c_a: float, c_b: float, params: SkillModelParams
) -> float:
    if params.scale is None:
        raise ValueError("params.scale is unresolved; call with_scale_for() first")
    residual = predicted_margin(obs.t_a, obs.t_b, c_a, c_b, params) - obs.margin
    return params.amplitude * math.exp(-((residual / params.scale) ** 2))


def _coach_skill_for(
    team: str, skills: CoachSkillVector, assignments: Mapping[str, str]
) -> float:
    coach = assignments.get(team)
    if coach is None:
        return FIXED_COACH_SKILL
    try:
        return skills[coach]
    except KeyError:
        raise MissingCoach(team) from None


def season_log_likelihood(
    observations: Sequence[GameObservation],
    skills: CoachSkillVector,
    assignments: Mapping[str, str],
    params: SkillModelParams,
) -> float:
    """Sum of log margin probabilities over the season's games.

    Teams without an entry in ``assignments`` play with coach skill 1.
    """
    params = params.with_scale_for(observations)
    total = 0.0
    for obs in observations:
        c_a = _coach_skill_for(obs.team_a, skills, assignments)
        c_b = _coach_skill_for(obs.team_b, skills, assignments)
        prob = margin_probability(obs, c_a, c_b, params)
        if prob >= sys.float_info.min:
            total += math.log(prob)
        else:
            # exp went subnormal or underflowed; take the log analytically
            r = predicted_margin(obs.t_a, obs.t_b, c_a, c_b, params) - obs.margin
            total += math.log(params.amplitude) - (r / params.scale) ** 2
    return total


def cost_J(
    observations: Sequence[GameObservation],
    skills: CoachSkillVector,
    assignments: Mapping[str, str],
    params: SkillModelParams,
) -> float:
    """Sum of squared margin residuals; uncoached teams keep coach skill 1."""
    problem = SeasonProblem.from_observations(observations, assignments, params)
    missing = [
        team
        for team in problem.teams
        if team in assignments and assignments[team] not in skills
    ]
    if missing:
        raise MissingCoach(missing[0])
    c = np.array([skills[coach] for coach in problem.coaches], dtype=float)
    return problem.cost(c)


class SeasonProblem:
    """Vectorized form of the season cost over the free coach skills.

    ``coaches`` lists the optimization variables in a fixed (sorted) order;
    teams whose coach is unknown keep coach skill 1 and are not variables.
    """

    def __init__(
        self,
        teams: Sequence[str],
        team_skill: np.ndarray,
        team_var: np.ndarray,
        coaches: Sequence[str],
        idx_a: np.ndarray,
        idx_b: np.ndarray,
        margin: np.ndarray,
        params: SkillModelParams,
    ):
        self.teams = list(teams)
        self.team_skill = np.asarray(team_skill, dtype=float)
        self.team_var = np.asarray(team_var, dtype=int)
        self.coaches = list(coaches)
        self.idx_a = np.asarray(idx_a, dtype=int)
        self.idx_b = np.asarray(idx_b, dtype=int)
        self.margin = np.asarray(margin, dtype=float)
        self.params = params
        self._free = self.team_var >= 0

    @classmethod
    def from_observations(
        cls,
        observations: Sequence[GameObservation],
        assignments: Mapping[str, str],
        params: SkillModelParams,
    ) -> "SeasonProblem":
        team_skill: dict[str, float] = {}
        for o in observations:
            for team, t in ((o.team_a, o.t_a), (o.team_b, o.t_b)):
                if team_skill.setdefault(team, t) != t:
                    raise ValueError(f"inconsistent team skill for {team!r}")
        teams = sorted(team_skill)
        tindex = {t: i for i, t in enumerate(teams)}
        coaches = sorted({assignments[t] for t in teams if t in assignments})
        cindex = {c: i for i, c in enumerate(coaches)}
        team_var = [cindex[assignments[t]] if t in assignments else -1 for t in teams]
        return cls(
            teams=teams,
            team_skill=np.array([team_skill[t] for t in teams]),
            team_var=np.array(team_var, dtype=int),
            coaches=coaches,
            idx_a=np.array([tindex[o.team_a] for o in observations], dtype=int),
            idx_b=np.array([tindex[o.team_b] for o in observations], dtype=int),
            margin=np.array([o.margin for o in observations], dtype=float),
            params=params.with_scale_for(observations),
        )

    @property
    def n_games(self) -> int:
        return len(self.margin)

    def team_coach_skills(self, coach_skills: np.ndarray) -> np.ndarray:
        c = np.full(len(self.teams), FIXED_COACH_SKILL)
        c[self._free] = np.asarray(coach_skills, dtype=float)[self.team_var[self._free]]
        return c

    def kink_pairs(self, z: np.ndarray, tol: float) -> list[tuple[int, int]]:
        """Coach-variable pairs that met and sit within ``tol`` of ``p_a == p_b``.

        ``z`` is the vector of log coach skills. The cost is not smooth across
        these points, and moving along one means changing both skills together.
        """
        va, vb = self.team_var[self.idx_a], self.team_var[self.idx_b]
        both = (va >= 0) & (vb >= 0) & (va != vb)
        if not np.any(both):
            return []
        log_t = np.log(self.team_skill)
        zt = np.zeros(len(self.teams))
        zt[self._free] = np.asarray(z, dtype=float)[self.team_var[self._free]]
        log_p = log_t - zt
        close = both & (np.abs(log_p[self.idx_a] - log_p[self.idx_b]) <= tol)
        pairs = {tuple(sorted((int(i), int(j)))) for i, j in zip(va[close], vb[close])}
        return sorted(pairs)

    def residuals(self, coach_skills: np.ndarray) -> np.ndarray:
        c = self.team_coach_skills(coach_skills)
        if np.any(c <= 0):
            raise NonpositiveCoachSkill(float(c.min()))
        p = self.team_skill / c
        p_a, p_b = p[self.idx_a], p[self.idx_b]
        c_a, c_b = c[self.idx_a], c[self.idx_b]
        prm = self.params
        coach = (c_a - c_b) * (1.0 / (1.0 + prm.alpha * np.abs(p_a - p_b)))
        return prm.w_player * (p_a - p_b) + prm.w_coach * coach - self.margin

    def cost(self, coach_skills: np.ndarray) -> float:
        r = self.residuals(coach_skills)
        return float(np.sum(r * r))

    def cost_log(self, log_skills: np.ndarray) -> float:
        return self.cost(np.exp(log_skills))


def observations_from_games(
    games: Iterable, team_skills: Mapping[str, float]
) -> list[GameObservation]:
    return [
        GameObservation(
            g.team_a, g.team_b, g.margin, team_skills[g.team_a], team_skills[g.team_b]
        )
        for g in games
    ]


def rescaled_team_skills(
    centrality: CentralityVector, rescale: bool = True
) -> dict[str, float]:
    """Centrality scores, divided by the season maximum when ``rescale``."""
    scores = dict(centrality.scores)
    if not rescale:
        return scores
    top = max(scores.values())
    return {t: v / top for t, v in scores.items()}
