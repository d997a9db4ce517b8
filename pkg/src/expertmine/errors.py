"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class ExpertmineError(Exception):
    """Base class for all errors raised by this package."""


class RepositoryNotFound(ExpertmineError):
    pass


class BranchNotFound(ExpertmineError):
    pass


class VcsToolFailure(ExpertmineError):
    def __init__(self, args: list[str], returncode: int, stderr: str) -> None:
        self.command = list(args)
        self.returncode = returncode
        self.stderr = stderr
        super().__init__(
            f"{' '.join(args)} exited with {returncode}: {stderr.strip()}"
        )


class UnknownProfile(ExpertmineError):
    pass


class ParseFailure(ExpertmineError):
    pass


class ProfileLacksCoupling(ExpertmineError):
    pass


class CheckerProcessFailure(ExpertmineError):
    def __init__(self, command: list[str], returncode: int, stderr: str) -> None:
        self.command = list(command)
        self.returncode = returncode
        self.stderr = stderr
        super().__init__(f"checker {command!r} exited with {returncode}: {stderr.strip()}")


class CheckerProtocolError(ExpertmineError):
    def __init__(self, message: str, payload: str) -> None:
        self.payload = payload
        super().__init__(message)


class UnknownMetric(ExpertmineError):
    pass


class EmptyMarks(ExpertmineError):
    pass


class MissingMetrics(ExpertmineError):
    pass


class StoreCorrupted(ExpertmineError):
    pass


class ConfigError(ExpertmineError):
    pass
