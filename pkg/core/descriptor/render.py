from mako.template import Template

from core.descriptor.types import DeploymentDescriptor

DESCRIPTOR_TEMPLATE = Template("""\
% for v in desc.variables:
% if v.default is None:
variable ${v.name}
% else:
variable ${v.name} = ${v.default}
% endif
% endfor
% for vn in desc.virtual_nodes:
virtualnode ${vn.name} ${vn.multiplicity.value}${' timeout=%d' % vn.timeout if vn.timeout else ''}
% endfor
% for source, target in desc.mappings:
mapping ${source} -> ${target}
% endfor
% for p in desc.process_definitions:
process ${p.name} launcher=${p.launcher_kind} hostlist="${p.hostlist_expr}"
% endfor
""")


def render(descriptor: DeploymentDescriptor) -> str:
    """Canonical text form; parsing it gives back an equal descriptor."""
    return DESCRIPTOR_TEMPLATE.render(desc=descriptor)
