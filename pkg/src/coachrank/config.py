"""Run configuration loaded from a JSON document.

Example::

    {
      "games_path": "games.csv",
      "coaches_path": "coaches.csv",
      "alias_path": "aliases.csv",
      "seasons": {"first": 2008, "last": 2010},
      "model": {"alpha": 10, "w_player": 1, "w_coach": 1},
      "optimizer": {"restarts": 3, "seed": 0},
      "epsilon": 1e-4,
      "k": 5,
      "min_years": 5,
      "output_dir": "out"
    }

Relative paths resolve against the directory holding the config file.
``seasons`` may be an explicit list, an inclusive ``first``/``last`` range,
or omitted to mean every season present in the games file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .errors import InvalidSpec
from .model import SkillModelParams
from .network import DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL
from .optimize import PowellConfig
from .pipeline import PipelineConfig
from .rank import DEFAULT_K, DEFAULT_MIN_YEARS

_KEYS = {
    "games_path",
    "coaches_path",
    "alias_path",
    "seasons",
    "model",
    "optimizer",
    "epsilon",
    "centrality_tol",
    "centrality_max_iter",
    "rescale",
    "k",
    "min_years",
    "output_dir",
}


@dataclass(frozen=True)
class RunConfig:
    games_path: Path
    coaches_path: Path
    alias_path: Path | None = None
    # None selects every season in the games file
    seasons: tuple[int, ...] | None = None
    model: SkillModelParams = field(default_factory=SkillModelParams)
    optimizer: PowellConfig = field(default_factory=PowellConfig)
    epsilon: float = DEFAULT_EPSILON
    centrality_tol: float = DEFAULT_TOL
    centrality_max_iter: int = DEFAULT_MAX_ITER
    rescale: bool = True
    k: int = DEFAULT_K
    min_years: int = DEFAULT_MIN_YEARS
    output_dir: Path = Path("out")

    def __post_init__(self):
        if self.seasons is not None and not self.seasons:
            raise InvalidSpec("seasons must not be empty")
        if self.k < 1 or self.min_years < 1:
            raise InvalidSpec("k and min_years must be >= 1")
        if self.epsilon < 0:
            raise InvalidSpec("epsilon must be >= 0")

    def pipeline(self, seed: int | None = None) -> PipelineConfig:
        optimizer = self.optimizer if seed is None else replace(self.optimizer, seed=seed)
        return PipelineConfig(
            epsilon=self.epsilon,
            centrality_tol=self.centrality_tol,
            centrality_max_iter=self.centrality_max_iter,
            model=self.model,
            optimizer=optimizer,
            rescale=self.rescale,
        )

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Path | str = ".") -> "RunConfig":
        if not isinstance(doc, Mapping):
            raise InvalidSpec("config must be a JSON object")
        unknown = set(doc) - _KEYS
        if unknown:
            raise InvalidSpec(f"unknown config key(s): {sorted(unknown)}")
        for key in ("games_path", "coaches_path"):
            if key not in doc:
                raise InvalidSpec(f"config is missing {key!r}")
        base = Path(base_dir)

        def path(value):
            return None if value is None else base / value

        try:
            kwargs = dict(
                games_path=path(doc["games_path"]),
                coaches_path=path(doc["coaches_path"]),
                alias_path=path(doc.get("alias_path")),
                seasons=_parse_seasons(doc.get("seasons")),
                model=SkillModelParams.from_dict(doc.get("model", {})),
                optimizer=PowellConfig.from_dict(doc.get("optimizer", {})),
                output_dir=path(doc.get("output_dir", "out")),
            )
            for key, kind in (
                ("epsilon", float),
                ("centrality_tol", float),
                ("centrality_max_iter", int),
                ("rescale", bool),
                ("k", int),
                ("min_years", int),
            ):
                if key in doc:
                    kwargs[key] = kind(doc[key])
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise InvalidSpec(str(exc)) from None

    @classmethod
    def load(cls, path: Path | str) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InvalidSpec(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc, path.parent)


def _parse_seasons(value) -> tuple[int, ...] | None:
    if value is None:
        return None
    if isinstance(value, Mapping):
        first, last = int(value["first"]), int(value["last"])
        if first > last:
            raise InvalidSpec("season range must have first <= last")
        return tuple(range(first, last + 1))
    if isinstance(value, list):
        return tuple(sorted({int(v) for v in value}))
    raise InvalidSpec("seasons must be a list or a {first, last} range")
