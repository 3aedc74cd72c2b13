"""Exception hierarchy shared by the pipeline stages."""

from __future__ import annotations


class CoachRankError(Exception):
    """Base class for every error raised by coachrank."""


# ingest


class IngestError(CoachRankError):
    pass


class MissingFile(IngestError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"no such file: {self.path}")


class MalformedRow(IngestError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class TieGame(MalformedRow):
    def __init__(self, line: int):
        super().__init__(line, "tie game")


class DuplicateAssignment(IngestError):
    def __init__(self, season: int, team: str, line: int | None = None):
        self.season = season
        self.team = team
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}duplicate coach assignment for ({season}, {team})")


class AliasChain(IngestError):
    def __init__(self, raw: str, canonical: str):
        self.raw = raw
        self.canonical = canonical
        super().__init__(
            f"alias target {canonical!r} is itself remapped (from {raw!r})"
        )


class EmptySeason(IngestError):
    def __init__(self, season: int):
        self.season = season
        super().__init__(f"no games for season {season}")


# network


class NetworkError(CoachRankError):
    pass


class DegenerateNetwork(NetworkError):
    pass


class NotConverged(NetworkError):
    """Power iteration ran out of iterations; ``result`` holds the best iterate."""

    def __init__(self, result, message: str | None = None):
        self.result = result
        super().__init__(
            message
            or f"power iteration did not converge in {result.iterations} iterations"
        )


# model


class ModelError(CoachRankError):
    pass


class NonpositiveCoachSkill(ModelError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"coach skill must be positive, got {value!r}")


class MissingCoach(ModelError):
    def __init__(self, team: str):
        self.team = team
        super().__init__(f"no fitted skill for the coach of {team!r}")


# optimize


class OptimizeError(CoachRankError):
    pass


class InvalidBracket(OptimizeError):
    pass


class NonFiniteObjective(OptimizeError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"objective is not finite at {point!r}")


class NoCoachedTeams(OptimizeError):
    pass


# experiments


class TargetNotFound(CoachRankError):
    pass


class InvalidSpec(CoachRankError):
    pass
