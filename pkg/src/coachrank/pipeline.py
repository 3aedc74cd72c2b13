"""One season end to end: network, centrality, coach-skill fit."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ingest import SeasonDataset
from .model import (
    GameObservation,
    SkillModelParams,
    observations_from_games,
    rescaled_team_skills,
)
from .network import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    CentralityVector,
    SeasonNetwork,
    build_network,
    eigenvector_centrality,
)
from .optimize import FitResult, PowellConfig, fit_season


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = DEFAULT_EPSILON
    centrality_tol: float = DEFAULT_TOL
    centrality_max_iter: int = DEFAULT_MAX_ITER
    model: SkillModelParams = field(default_factory=SkillModelParams)
    optimizer: PowellConfig = field(default_factory=PowellConfig)
    rescale: bool = True


@dataclass(frozen=True)
class SeasonResult:
    season: int
    network: SeasonNetwork
    centrality: CentralityVector
    observations: list[GameObservation]
    fit: FitResult


def season_centrality(
    dataset: SeasonDataset, config: PipelineConfig
) -> tuple[SeasonNetwork, CentralityVector]:
    network = build_network(dataset)
    centrality = eigenvector_centrality(
        network, config.epsilon, config.centrality_tol, config.centrality_max_iter
    )
    return network, centrality


def run_season(dataset: SeasonDataset, config: PipelineConfig | None = None) -> SeasonResult:
    config = config or PipelineConfig()
    network, centrality = season_centrality(dataset, config)
    team_skills = rescaled_team_skills(centrality, config.rescale)
    observations = observations_from_games(dataset.games, team_skills)
    teams = set(network.teams)
    assignments = {t: c for t, c in dataset.coach_map().items() if t in teams}
    fit = fit_season(
        observations, assignments, config.model, config.optimizer, season=dataset.season
    )
    return SeasonResult(dataset.season, network, centrality, observations, fit)
