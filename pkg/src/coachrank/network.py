"""Season win/loss digraph and eigenvector-centrality team skills.

Edges point from winner to loser. A team's score accumulates from the
scores of the teams it beat::

    x_n = (1/lambda) * sum_t A'[n, t] * x_t,   A' = A + eps * ones

The uniform ``eps`` term makes ``A'`` strictly positive, so the principal
eigenvector is unique and positive even when the raw season graph is
acyclic or split into components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping
from xml.sax.saxutils import quoteattr

import numpy as np

from .errors import DegenerateNetwork, NotConverged
from .ingest import GameRecord, SeasonDataset

DEFAULT_EPSILON = 1e-4
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

# Each step multiplies by (A' + s*I) with s half the current Rayleigh estimate
# of the Perron root. The shift leaves eigenvectors unchanged but keeps the
# Perron root dominant in modulus, so nearly periodic (almost acyclic) season
# graphs do not make the iteration oscillate.
_SHIFT_FRACTION = 0.5


@dataclass(frozen=True)
class EdgeData:
    weight: int
    margins: tuple[int, ...]

    def __post_init__(self):
        if self.weight != len(self.margins):
            raise ValueError("edge weight must equal the number of margins")
        if any(m <= 0 for m in self.margins):
            raise ValueError("margins must be positive")


@dataclass(frozen=True)
class SeasonNetwork:
    teams: tuple[str, ...]
    edges: Mapping[tuple[int, int], EdgeData] = field(default_factory=dict)
    season: int | None = None

    def index(self, team: str) -> int:
        return self.teams.index(team)

    def edge(self, winner: str, loser: str) -> EdgeData | None:
        return self.edges.get((self.index(winner), self.index(loser)))

    @property
    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges.values())


@dataclass(frozen=True)
class CentralityVector:
    scores: Mapping[str, float]
    eigenvalue: float
    iterations: int
    converged: bool

    def ranked(self) -> list[tuple[str, float]]:
        """Teams by descending score, ties broken by team id."""
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))


def build_network(dataset: SeasonDataset | list[GameRecord]) -> SeasonNetwork:
    games = dataset.games if isinstance(dataset, SeasonDataset) else list(dataset)
    teams = sorted({t for g in games for t in (g.team_a, g.team_b)})
    index = {t: i for i, t in enumerate(teams)}
    margins: dict[tuple[int, int], list[int]] = {}
    for g in games:
        key = (index[g.winner], index[g.loser])
        margins.setdefault(key, []).append(abs(g.margin))
    edges = {
        key: EdgeData(len(ms), tuple(sorted(ms))) for key, ms in sorted(margins.items())
    }
    season = dataset.season if isinstance(dataset, SeasonDataset) else None
    return SeasonNetwork(tuple(teams), edges, season)


def adjacency_matrix(network: SeasonNetwork) -> np.ndarray:
    n = len(network.teams)
    a = np.zeros((n, n))
    for (i, j), e in network.edges.items():
        a[i, j] = e.weight
    return a


def _matvec(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Row sums through numpy's pairwise summation rather than BLAS, so the
    # result does not depend on BLAS threading.
    return (m * x).sum(axis=1)


def power_iteration(
    matrix: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[np.ndarray, float, int, bool]:
    """Principal eigenvector of a non-negative matrix by shifted power iteration.

    Returns ``(x, eigenvalue, iterations, converged)`` with ``x`` unit-norm.
    Convergence requires the max-norm step between iterates to drop below
    ``tol`` and the geometric-tail estimate of the remaining error
    (``step * r / (1 - r)``, ``r`` the observed contraction ratio) to do the
    same; the second condition matters when the spectral gap is small.
    """
    n = matrix.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    converged = False
    prev_step = None
    it = 0
    for it in range(1, max_iter + 1):
        ax = _matvec(matrix, x)
        rho = float(np.dot(x, ax))
        y = ax + _SHIFT_FRACTION * rho * x
        norm = math.sqrt(float(np.dot(y, y)))
        if norm == 0.0:
            break
        y /= norm
        step = float(np.max(np.abs(y - x)))
        x = y
        if step < tol:
            r = min(step / prev_step, 1.0 - 1e-6) if prev_step else 0.0
            if step * r / (1.0 - r) < tol:
                converged = True
                break
        prev_step = step
    eigenvalue = float(np.dot(x, _matvec(matrix, x)) / np.dot(x, x))
    return x, eigenvalue, it, converged


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    for m in (adj, adj.T):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(m[i] > 0):
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        if len(seen) < n:
            return False
    return True


def eigenvector_centrality(
    network: SeasonNetwork,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CentralityVector:
    """Damped eigenvector centrality of every team in ``network``.

    Raises :class:`NotConverged` (carrying the last iterate) when the
    iteration has not settled after ``max_iter`` steps. With ``epsilon == 0``
    a positive eigenvector exists only for strongly connected seasons; other
    seasons raise :class:`DegenerateNetwork`.
    """
    n = len(network.teams)
    if n < 2:
        raise DegenerateNetwork(f"centrality needs at least 2 teams, got {n}")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    adj = adjacency_matrix(network)
    if epsilon == 0 and not _strongly_connected(adj):
        raise DegenerateNetwork(
            "season graph is not strongly connected; use epsilon > 0"
        )
    damped = adj + epsilon
    x, eigenvalue, iterations, converged = power_iteration(damped, tol, max_iter)
    result = CentralityVector(
        scores={t: float(v) for t, v in zip(network.teams, x)},
        eigenvalue=eigenvalue,
        iterations=iterations,
        converged=converged,
    )
    if not converged:
        raise NotConverged(result)
    if np.any(x <= 0.0):
        raise DegenerateNetwork(
            "principal eigenvector has non-positive entries; use epsilon > 0"
        )
    return result


def _fmt(value: float) -> str:
    return repr(float(value))


def format_graphml(network: SeasonNetwork, centrality: CentralityVector) -> str:
    missing = [t for t in network.teams if t not in centrality.scores]
    if missing:
        raise ValueError(f"centrality missing for teams {missing}")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="centrality" for="node" attr.name="centrality" attr.type="double"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>',
        '  <key id="margins" for="edge" attr.name="margins" attr.type="string"/>',
        '  <graph id="season" edgedefault="directed">',
    ]
    for team in network.teams:
        lines.append(f"    <node id={quoteattr(team)}>")
        lines.append(
            f'      <data key="centrality">{_fmt(centrality.scores[team])}</data>'
        )
        lines.append("    </node>")
    for k, ((i, j), e) in enumerate(sorted(network.edges.items())):
        src, dst = quoteattr(network.teams[i]), quoteattr(network.teams[j])
        lines.append(f'    <edge id="e{k}" source={src} target={dst}>')
        lines.append(f'      <data key="weight">{e.weight}</data>')
        margins = ",".join(str(m) for m in e.margins)
        lines.append(f'      <data key="margins">{margins}</data>')
        lines.append("    </edge>")
    lines += ["  </graph>", "</graphml>", ""]
    return "\n".join(lines)


def export_graphml(network: SeasonNetwork, centrality: CentralityVector, path) -> None:
    Path(path).write_text(format_graphml(network, centrality), encoding="utf-8")


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_dot(network: SeasonNetwork, centrality: CentralityVector) -> str:
    """DOT digraph; node ``width`` is centrality scaled so the top team is 2.0."""
    top = max(centrality.scores[t] for t in network.teams)
    lines = ["digraph season {"]
    for team in network.teams:
        score = centrality.scores[team]
        width = 2.0 * score / top if top > 0 else 0.0
        lines.append(
            f"  {_dot_id(team)} [width={width:.6f}, centrality={_fmt(score)}];"
        )
    for (i, j), e in sorted(network.edges.items()):
        margins = ",".join(str(m) for m in e.margins)
        lines.append(
            f'  {_dot_id(network.teams[i])} -> {_dot_id(network.teams[j])} '
            f'[weight={e.weight}, margins="{margins}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(network: SeasonNetwork, centrality: CentralityVector, path) -> None:
    Path(path).write_text(format_dot(network, centrality), encoding="utf-8")
