"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied input (scenario, knowledge base, config, log)."""


class ScenarioError(InputError):
    """Scenario file failed to parse or validate."""


class KnowledgeBaseError(InputError):
    """Knowledge-base document failed to parse or validate."""


class ConfigError(InputError):
    """Agent configuration failed to validate."""


class AlertLogError(InputError):
    """Alert log file failed to parse."""
