from typing import List, Optional


class HiermonError(Exception):
    """Base class for every error raised by hiermon."""


class ConfigurationError(HiermonError, ValueError):
    """Misconfiguration: unknown actor, invalid parameter, broken invariant on input."""


class TopologyError(ConfigurationError):
    """The hierarchy is cyclic, multi-rooted, disconnected or otherwise malformed."""


class DescriptorError(ConfigurationError):
    """A deployment descriptor failed to parse, resolve or launch."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ScenarioError(ConfigurationError):
    """A scenario file is invalid. Carries every violation found, not just the first."""

    def __init__(self, violations: List[str], source: Optional[str] = None):
        self.violations = list(violations)
        self.source = source
        where = f" in {source}" if source else ""
        details = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} scenario violation(s){where}:\n{details}")
