from core.control.rules import RuleContext, reactor_rule
from core.control.types import ReplaceNode
from core.membership import NODE_FAILED, LifecycleEvent
from core.messages import REPAIR


@reactor_rule(domain=REPAIR, trigger=NODE_FAILED)
def replace_failed_node(event: LifecycleEvent, ctx: RuleContext):
    """Replace a failed child by redeploying the apps the System Representation places on it."""
    apps = tuple(sorted(ctx.representation.apps_on(event.node)))
    if not apps:
        return []
    return [ReplaceNode(failed=event.node, apps=apps)]
