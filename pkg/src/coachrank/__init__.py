"""Coach rankings from game results.

Teams are scored by eigenvector centrality on each season's win/loss
digraph; a least-squares margin model then splits each team score into a
coach factor and a player factor, and the coach factors are ranked.
"""

from .errors import CoachRankError
from .experiments import (
    Perturbation,
    SensitivityReport,
    SyntheticSpec,
    apply_perturbation,
    generate_synthetic,
    sensitivity_run,
)
from .ingest import (
    AliasTable,
    CoachAssignment,
    GameRecord,
    SeasonDataset,
    build_season_dataset,
    parse_aliases,
    parse_coaches,
    parse_games,
)
from .model import (
    CoachSkillVector,
    GameObservation,
    SkillModelParams,
    coach_effect,
    cost_J,
    margin_probability,
    player_skill,
    season_log_likelihood,
)
from .network import (
    CentralityVector,
    SeasonNetwork,
    adjacency_matrix,
    build_network,
    eigenvector_centrality,
    export_dot,
    export_graphml,
)
from .optimize import FitResult, PowellConfig, brent_line_min, fit_season, powell_minimize
from .pipeline import PipelineConfig, SeasonResult, run_season
from .rank import CareerRecord, YearlyRanking, career_values, yearly_top_k

__version__ = "0.1.0"

__all__ = [
    "AliasTable",
    "CareerRecord",
    "CentralityVector",
    "CoachAssignment",
    "CoachRankError",
    "CoachSkillVector",
    "FitResult",
    "GameObservation",
    "GameRecord",
    "Perturbation",
    "PipelineConfig",
    "PowellConfig",
    "SeasonDataset",
    "SeasonNetwork",
    "SeasonResult",
    "SensitivityReport",
    "SkillModelParams",
    "SyntheticSpec",
    "YearlyRanking",
    "adjacency_matrix",
    "apply_perturbation",
    "brent_line_min",
    "build_network",
    "build_season_dataset",
    "career_values",
    "coach_effect",
    "cost_J",
    "eigenvector_centrality",
    "export_dot",
    "export_graphml",
    "fit_season",
    "generate_synthetic",
    "margin_probability",
    "parse_aliases",
    "parse_coaches",
    "parse_games",
    "player_skill",
    "powell_minimize",
    "run_season",
    "season_log_likelihood",
    "sensitivity_run",
    "yearly_top_k",
]
