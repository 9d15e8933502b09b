from core.control.rules import RuleRegistry
from rules.optimization import cpu_threshold
from rules.repair import replace_failed_node

DEFAULT_RULES = [{"rule": "replace_failed_node"}]


def build_registry() -> RuleRegistry:
    registry = RuleRegistry()
    registry.register("replace_failed_node", replace_failed_node)
    registry.register("cpu_threshold", cpu_threshold)
    return registry


__all__ = ["DEFAULT_RULES", "build_registry", "cpu_threshold", "replace_failed_node"]
