from core.gma.aggregation import summarize
from core.gma.directory import Directory, DirectoryActor, directory_id
from core.gma.producer import Consumer, Producer
from core.gma.republisher import Republisher
from core.gma.types import AggregationSpec, MetricEvent, Registration, RegistrationKind

__all__ = [
    'AggregationSpec', 'Consumer', 'Directory', 'DirectoryActor', 'MetricEvent', 'Producer',
    'Registration', 'RegistrationKind', 'Republisher', 'directory_id', 'summarize',
]
