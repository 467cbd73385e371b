"""Exception hierarchy for stablekit.

Input problems map to exit code 1, refused preconditions to exit code 2.
"""

from typing import Any, Dict, Optional


class StableKitError(Exception):
    """Base class for every error raised by stablekit."""

    exit_code = 1

    def payload(self) -> Dict[str, Any]:
        """Machine-readable description embedded in CLI reports."""
        return {"error": type(self).__name__, "message": str(self)}


class InputError(StableKitError):
    """Malformed input: words, files, specs."""

    exit_code = 1


class WordParseError(InputError):
    """A word string contains characters outside a-z/A-Z or exceeds the rank."""

    def __init__(self, text: str, position: int, reason: str):
        self.text = text
        self.position = position
        self.reason = reason
        super().__init__(f"cannot parse word {text!r} at position {position}: {reason}")

    def payload(self) -> Dict[str, Any]:
        data = super().payload()
        data.update({"text": self.text, "position": self.position, "reason": self.reason})
        return data


class RankMismatchError(InputError):
    """Two operands live in free groups of different rank."""

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        super().__init__(f"rank mismatch: {left} != {right}")


class SubgroupFileError(InputError):
    """A subgroup file could not be parsed."""


class QuasimorphismSpecError(InputError):
    """A quasimorphism JSON descriptor is invalid."""


class ExperimentSpecError(InputError):
    """An experiment spec has unknown keys or out-of-range parameters."""


class UsageError(InputError):
    """Bad command-line arguments."""


class PreconditionRefused(StableKitError):
    """An operation refused to run because its mathematical precondition fails."""

    exit_code = 2


class IncompatibleFamilyError(PreconditionRefused):
    """Subgroup quasimorphisms disagree on conjugate elements."""

    def __init__(self, report: Any):
        self.report = report
        count = len(report.violations)
        super().__init__(f"family is not intersection-compatible ({count} violation(s))")

    def payload(self) -> Dict[str, Any]:
        data = super().payload()
        data["report"] = self.report.to_dict()
        return data


class NotMalnormalError(PreconditionRefused):
    """A subgroup required to be malnormal is not."""

    def __init__(self, subgroup: str, witness: Optional[str]):
        self.subgroup = subgroup
        self.witness = witness
        super().__init__(f"subgroup {subgroup} is not malnormal (witness {witness!r})")

    def payload(self) -> Dict[str, Any]:
        data = super().payload()
        data.update({"subgroup": self.subgroup, "witness": self.witness})
        return data


class NotPairwiseCloseError(PreconditionRefused):
    """A coset family is not pairwise D-close."""

    def __init__(self, first: Any, second: Any, distance: int, bound: int):
        self.first = first
        self.second = second
        self.distance = distance
        self.bound = bound
        super().__init__(f"not pairwise {bound}-close: {first} and {second} are {distance} apart")

    def payload(self) -> Dict[str, Any]:
        data = super().payload()
        data.update({
            "pair": [str(self.first), str(self.second)],
            "distance": self.distance,
            "D": self.bound,
        })
        return data


class InfiniteIndexRequiredError(PreconditionRefused):
    """A subgroup required to have infinite index has finite index."""


class BudgetExceededError(PreconditionRefused):
    """A randomized search ran out of retries."""

    def __init__(self, message: str, attempts: int):
        self.attempts = attempts
        super().__init__(message)

    def payload(self) -> Dict[str, Any]:
        data = super().payload()
        data["attempts"] = self.attempts
        return data


class OracleMismatchError(PreconditionRefused):
    """Smart enumeration and brute-force oracle disagree (test mode only)."""
