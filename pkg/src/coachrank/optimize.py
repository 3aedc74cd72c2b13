"""Derivative-free minimization of the season cost.

``powell_minimize`` is Powell's conjugate-direction method. Each sweep runs a
line minimization along every direction in the set, then a final one along
the sweep's net displacement, which joins the set at the end. The direction
it displaces is the one that gave the largest decrease among those not yet
replaced in the current cycle; keeping the replaced directions in order at
the tail of the set is what makes a quadratic in ``n`` variables finish in
``n`` sweeps. A swap is skipped when it would leave the direction set
numerically dependent. Line minimizations bracket by golden-ratio expansion
and refine with Brent's method.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InvalidBracket, NoCoachedTeams, NonFiniteObjective
from .model import CoachSkillVector, GameObservation, SeasonProblem, SkillModelParams

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
_CGOLD = 2.0 - GOLDEN  # 0.381966...
_ZEPS = 1e-12
_TINY = 1e-300

BRACKET_STEP = 0.1
BRACKET_EXPANSIONS = 50

# Smallest singular value allowed for the unit-normalized direction set.
DEPENDENCE_TOL = 1e-10

# Bound penalty weight, relative to the starting cost.
PENALTY_SCALE = 1e4

# How close |log p_a - log p_b| must be to zero to count as sitting on a kink.
KINK_TOL = 1e-5
MAX_POLISH_ROUNDS = 50


@dataclass(frozen=True)
class PowellConfig:
    x_tol: float = 1e-8
    f_tol: float = 1e-12
    max_iters: int = 2000
    max_line_iters: int = 200
    line_tol: float = 1e-8
    restarts: int = 3
    seed: int = 0
    bounds_log: tuple[float, float] = (-2.3, 2.3)

    def __post_init__(self):
        if not (self.x_tol > 0 and self.f_tol > 0 and self.line_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1 or self.max_line_iters < 1:
            raise ValueError("iteration limits must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        lo, hi = self.bounds_log
        if not lo < hi:
            raise ValueError("bounds_log must satisfy lower < upper")
        object.__setattr__(self, "bounds_log", (float(lo), float(hi)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds_log"] = list(self.bounds_log)
        return d

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PowellConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown optimizer option(s): {sorted(unknown)}")
        doc = dict(doc)
        if "bounds_log" in doc:
            doc["bounds_log"] = tuple(doc["bounds_log"])
        return cls(**doc)


class PowellResult(NamedTuple):
    x: np.ndarray
    fun: float
    trace: list[float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FitResult:
    skills: CoachSkillVector
    final_cost: float
    iterations: int
    converged: bool
    restart_index: int
    cost_trace: list[float] = field(default_factory=list)
    season: int | None = None
    # geometric mean of the optimizer's skills, divided out of ``skills``
    gauge: float = 1.0

    def raw_skills(self) -> dict[str, float]:
        """Skills as the optimizer left them, before gauge fixing."""
        return {c: s * self.gauge for c, s in self.skills.skills.items()}

    def to_dict(self) -> dict:
        return {
            "season": self.season,
            "skills": dict(sorted(self.skills.skills.items())),
            "final_cost": self.final_cost,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "gauge": self.gauge,
            "cost_trace": list(self.cost_trace),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FitResult":
        return cls(
            skills=CoachSkillVector(dict(doc["skills"])),
            final_cost=float(doc["final_cost"]),
            iterations=int(doc["iterations"]),
            converged=bool(doc["converged"]),
            restart_index=int(doc["restart_index"]),
            cost_trace=[float(v) for v in doc["cost_trace"]],
            season=doc.get("season"),
            gauge=float(doc.get("gauge", 1.0)),
        )


def brent_line_min(
    f: Callable[[float], float],
    bracket: tuple[float, float, float],
    tol: float = 1e-8,
    max_iters: int = 200,
) -> tuple[float, float]:
    """Minimize ``f`` inside ``bracket = (a, m, b)`` by Brent's method.

    Needs ``a < m < b`` and ``f(m) < min(f(a), f(b))``. Returns
    ``(argmin, min)``.
    """
    a, m, b = (float(v) for v in bracket)
    if not a < m < b:
        raise InvalidBracket(f"bracket must satisfy a < m < b, got {bracket}")
    fa, fm, fb = f(a), f(m), f(b)
    if not (fm < fa and fm < fb):
        raise InvalidBracket(
            f"f(m)={fm!r} is not below f(a)={fa!r} and f(b)={fb!r}"
        )
    return _brent(f, a, b, m, fm, tol, max_iters)


def _brent(f, a, b, x, fx, tol, max_iters):
    # golden section with parabolic-step acceptance; a < x < b throughout
    w = v = x
    fw = fv = fx
    d = e = 0.0
    for _ in range(max_iters):
        xm = 0.5 * (a + b)
        tol1 = tol * abs(x) + _ZEPS
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) < abs(0.5 * q * etemp) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
                golden = False
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = _CGOLD * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def _checked(f, point):
    value = float(f(point))
    if not math.isfinite(value):
        raise NonFiniteObjective(np.array(point, dtype=float).tolist())
    return value


def _line_minimize(f, x, direction, fx, tol, max_iters):
    """Minimize ``f`` along ``x + s * direction``; never returns a worse point."""

    def g(s):
        return _checked(f, x + s * direction)

    a, fa = 0.0, fx
    b, fb = BRACKET_STEP, g(BRACKET_STEP)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    c = b + GOLDEN * (b - a)
    fc = g(c)
    for _ in range(BRACKET_EXPANSIONS):
        if fc >= fb:
            break
        a, fa, b, fb = b, fb, c, fc
        c = b + GOLDEN * (b - a)
        fc = g(c)
    if fb < fa and fb < fc:
        lo, hi = (a, c) if a < c else (c, a)
        s, fs = _brent(g, lo, hi, b, fb, tol, max_iters)
    else:
        s, fs = min(((a, fa), (b, fb), (c, fc)), key=lambda t: t[1])
    if fs < fx:
        return x + s * direction, fs
    return x, fx


def _independent(directions: list[np.ndarray]) -> bool:
    m = np.array([d / np.linalg.norm(d) for d in directions])
    return bool(np.linalg.svd(m, compute_uv=False)[-1] > DEPENDENCE_TOL)


def powell_minimize(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    config: PowellConfig | None = None,
) -> PowellResult:
    """Minimize ``f`` from ``x0`` by Powell's conjugate-direction method.

    Stops when a sweep lowers the cost by a relative amount below
    ``f_tol``, when the sweep displacement has max-norm below ``x_tol``, or
    after ``max_iters`` sweeps. ``trace`` holds the cost after each sweep.
    """
    config = config or PowellConfig()
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteObjective(x.tolist())
    n = x.size
    fx = _checked(f, x)
    directions = [row for row in np.eye(n)]
    replaced = 0  # directions at the tail that came from earlier sweeps
    trace: list[float] = []
    converged = False
    sweeps = 0

    def line(point, d, fval):
        return _line_minimize(f, point, d, fval, config.line_tol, config.max_line_iters)

    for sweeps in range(1, config.max_iters + 1):
        x_start, f_start = x.copy(), fx
        biggest, i_big = -1.0, 0
        for i, d in enumerate(directions):
            f_before = fx
            x, fx = line(x, d, fx)
            if i < n - replaced and f_before - fx > biggest:
                biggest, i_big = f_before - fx, i
        displacement = x - x_start
        small_drop = 2.0 * (f_start - fx) <= config.f_tol * (abs(f_start) + abs(fx)) + _TINY
        small_step = float(np.max(np.abs(displacement))) < config.x_tol
        if small_drop or small_step:
            trace.append(fx)
            converged = True
            break
        candidate = directions[:i_big] + directions[i_big + 1 :] + [displacement]
        if _independent(candidate):
            x, fx = line(x, displacement, fx)
            directions = candidate
            replaced = replaced + 1 if replaced < n - 1 else 0
        trace.append(fx)
    return PowellResult(x, fx, trace, sweeps, converged)


def _rng_for(seed: int, restart_index: int) -> np.random.Generator:
    return np.random.default_rng([seed % (1 << 63), restart_index])


def season_objective(problem: SeasonProblem, bounds_log, penalty_weight: float):
    """Cost over log coach skills plus a quadratic penalty outside the bounds."""
    lo, hi = bounds_log

    def objective(z):
        z = np.asarray(z, dtype=float)
        over = np.maximum(z - hi, 0.0)
        under = np.maximum(lo - z, 0.0)
        return problem.cost_log(z) + penalty_weight * float(
            np.sum(over * over) + np.sum(under * under)
        )

    return objective


def penalty_weight_for(problem: SeasonProblem) -> float:
    return PENALTY_SCALE * max(1.0, problem.cost(np.ones(len(problem.coaches))))


def _slide_along_kinks(objective, problem: SeasonProblem, res: PowellResult, config) -> PowellResult:
    """Continue past points where coordinate sweeps stall on a kink.

    Where two coached teams that met have equal player skill, the cost has a
    ridge that no single coordinate can descend along. Line searches along
    ``e_i + e_j`` for those pairs move down the valley; Powell then resumes.
    """
    x, fx = res.x, res.fun
    trace = list(res.trace)
    iterations, converged = res.iterations, res.converged
    for _ in range(MAX_POLISH_ROUNDS):
        pairs = problem.kink_pairs(x, KINK_TOL)
        if not pairs:
            break
        f_start = fx
        for i, j in pairs:
            d = np.zeros(x.size)
            d[i] = d[j] = 1.0
            x, fx = _line_minimize(objective, x, d, fx, config.line_tol, config.max_line_iters)
        if 2.0 * (f_start - fx) <= config.f_tol * (abs(f_start) + abs(fx)) + _TINY:
            break
        trace.append(fx)
        again = powell_minimize(objective, x, config)
        x, fx = again.x, again.fun
        trace.extend(again.trace)
        iterations += again.iterations
        converged = again.converged
    return PowellResult(x, fx, trace, iterations, converged)


def fit_season(
    observations: Sequence[GameObservation],
    assignments: Mapping[str, str],
    params: SkillModelParams | None = None,
    config: PowellConfig | None = None,
    season: int | None = None,
) -> FitResult:
    """Fit every coach's skill in one season by minimizing the margin cost.

    The search runs over log skills from all-ones, then from ``restarts``
    uniform random starts inside ``bounds_log``; the lowest final cost wins
    (ties go to the earlier run). Each run is continued along any kink it
    stalls on. Returned skills are divided by their geometric mean.
    """
    params = params or SkillModelParams()
    config = config or PowellConfig()
    if not observations:
        raise NoCoachedTeams("season has no games to fit")
    problem = SeasonProblem.from_observations(observations, assignments, params)
    n = len(problem.coaches)
    if n == 0:
        raise NoCoachedTeams("no team in the season has a known coach")
    objective = season_objective(problem, config.bounds_log, penalty_weight_for(problem))
    lo, hi = config.bounds_log

    best: tuple[PowellResult, int] | None = None
    for k in range(config.restarts + 1):
        z0 = np.zeros(n) if k == 0 else _rng_for(config.seed, k).uniform(lo, hi, n)
        res = _slide_along_kinks(objective, problem, powell_minimize(objective, z0, config), config)
        if best is None or res.fun < best[0].fun:
            best = (res, k)
    res, k = best
    shift = float(np.mean(res.x))
    skills = np.exp(res.x - shift)
    return FitResult(
        skills=CoachSkillVector(dict(zip(problem.coaches, map(float, skills)))),
        final_cost=float(res.fun),
        iterations=res.iterations,
        converged=res.converged,
        restart_index=k,
        cost_trace=[float(v) for v in res.trace],
        season=season,
        gauge=math.exp(shift),
    )
