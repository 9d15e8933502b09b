import logging
from typing import Any, Iterable, List

from core.control.rules import ReactorRule, RuleContext
from core.control.types import Action

logger = logging.getLogger(__name__)


class Reactor:
    """Decision step of the monitoring cycle: matches events against the manager's rules."""

    def __init__(self, manager: str, rules: Iterable[ReactorRule], disabled_domains: Iterable[str] = ()):
        self.manager = manager
        self.rules: List[ReactorRule] = list(rules)
        self.disabled_domains = set(disabled_domains)

    def react(self, event: Any, trigger: str, ctx: RuleContext) -> List[Action]:
        """Every matching rule contributes its actions, in declaration order."""
        actions: List[Action] = []
        for rule in self.rules:
            if rule.trigger != trigger or rule.domain in self.disabled_domains:
                continue
            produced = rule.evaluate(event, ctx)
            if produced:
                logger.debug(f"{self.manager}: rule {rule.name} -> {[a.kind for a in produced]}")
            actions.extend(produced)
        return actions
