import inspect
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from core.control.types import TRIGGERS, Action
from core.errors import ConfigurationError
from core.messages import DOMAINS

logger = logging.getLogger(__name__)

# Mapping Python types to scenario parameter types
TYPE_MAP = {
    str: "string",
    int: "integer",
    float: "number",
    bool: "boolean",
    list: "array",
    dict: "object"
}

# The first two parameters of every rule are the event and the rule context
_RESERVED = 2


def reactor_rule(domain: str, trigger: str):
    """
    Register a function as a reactor rule.

    The decorator inspects the signature past ``(event, ctx)`` and records a
    parameter schema, so scenario files can instantiate the rule with checked
    keyword parameters.

    Args:
        domain: Monitoring domain the rule belongs to (``repair``, ``optimization``)
        trigger: Kind of event the rule listens to, one of ``TRIGGERS``

    Returns:
        A decorator that attaches the rule schema as ``func.rule``
    """
    if domain not in DOMAINS:
        raise ConfigurationError(f"Unknown rule domain '{domain}'")
    if trigger not in TRIGGERS:
        raise ConfigurationError(f"Unknown rule trigger '{trigger}', expected one of {TRIGGERS}")

    def decorate(func):
        signature = inspect.signature(func)
        parameters = {"type": "object", "properties": {}, "required": []}

        for name, param in list(signature.parameters.items())[_RESERVED:]:
            param_type = TYPE_MAP.get(param.annotation, "string")
            entry: Dict[str, Any] = {"type": param_type}
            if hasattr(param.annotation, "__metadata__"):
                entry["type"] = TYPE_MAP.get(param.annotation.__origin__, "string")
                entry["description"] = param.annotation.__metadata__[0]
            if param.default is param.empty:
                parameters["required"].append(name)
            else:
                entry["default"] = param.default
            parameters["properties"][name] = entry

        func.rule = {
            "name": func.__name__,
            "description": (func.__doc__ or f"Rule {func.__name__}").strip(),
            "domain": domain,
            "trigger": trigger,
            "parameters": parameters,
        }
        return func

    return decorate


@dataclass
class RuleContext:
    """Read-only view of the manager handed to rules, plus the rule's own memory."""
    manager: str
    now: int
    representation: Any
    allocator: Any
    discovery: Any
    deployer: Any
    memory: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ReactorRule:
    """One instantiated rule. Each manager gets its own instance and memory."""
    name: str
    domain: str
    trigger: str
    func: Callable[..., List[Action]]
    params: Dict[str, Any] = field(default_factory=dict)
    memory: Dict[str, Any] = field(default_factory=dict)

    def evaluate(self, event: Any, ctx: RuleContext) -> List[Action]:
        ctx.memory = self.memory
        return list(self.func(event, ctx, **self.params) or [])


class RuleRegistry:
    def __init__(self):
        self._rules: Dict[str, Callable] = {}

    def register(self, name: str, func: Callable) -> "RuleRegistry":
        """Register a rule function with its schema."""
        if not hasattr(func, "rule"):
            raise ConfigurationError(f"Function {name} is not decorated with @reactor_rule")
        self._rules[name] = func
        return self

    def unregister(self, name: str) -> "RuleRegistry":
        self._rules.pop(name, None)
        return self

    def get(self, name: str) -> Callable:
        if name not in self._rules:
            raise ConfigurationError(f"Rule '{name}' not registered; known rules: {self.get_names()}")
        return self._rules[name]

    def has_rule(self, name: str) -> bool:
        return name in self._rules

    def get_names(self) -> List[str]:
        return list(self._rules)

    def get_schemas(self) -> List[dict]:
        return [func.rule for func in self._rules.values()]

    def check(self, name: str, params: Optional[Dict[str, Any]] = None) -> List[str]:
        """Problems with instantiating ``name`` with ``params``; empty when fine."""
        if not self.has_rule(name):
            return [f"unknown rule '{name}'"]
        params = params or {}
        schema = self._rules[name].rule["parameters"]
        problems = [f"rule '{name}': missing parameter '{p}'" for p in schema["required"] if p not in params]
        problems.extend(f"rule '{name}': unknown parameter '{p}'" for p in params if p not in schema["properties"])
        return problems

    def instantiate(self, name: str, params: Optional[Dict[str, Any]] = None) -> ReactorRule:
        problems = self.check(name, params)
        if problems:
            raise ConfigurationError("; ".join(problems))
        func = self._rules[name]
        logger.debug(f"Instantiating rule {name} with params: {params}")
        return ReactorRule(
            name=name,
            domain=func.rule["domain"],
            trigger=func.rule["trigger"],
            func=func,
            params=dict(params or {}),
        )
