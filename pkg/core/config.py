"""
Defaults and the settings bundle shared by every host.

Values here are the bottom of the precedence chain; scenario files and CLI
overrides are layered on top by ``core.scenario.loader``.
"""
import os
from dataclasses import dataclass, field
from typing import Dict, Tuple

DEFAULT_LATENCY = 10
DEFAULT_DROP_RATE = 0.0

HEARTBEAT_PERIOD = 1000
FAILURE_TIMEOUT = 3000
SWEEP_INTERVAL = 1000

REGISTRATION_REFRESH = 1000
REGISTRATION_TTL = 3 * REGISTRATION_REFRESH
DISCOVERY_DELAY = 100

WINDOW = 5000
FUNCTIONS: Tuple[str, ...] = ("mean", "max", "min", "count")
GROUP_BY = "property"

SENSOR_METRIC = "cpu"
SENSOR_PERIOD = 1000
SENSOR_NOISE = 0.0

CAPACITY: Dict[str, int] = {"cpu": 4}
INSTALL_TIMEOUT = 5000
ALLOCATION_TIMEOUT = 1000
REQUEST_TIMEOUT = 2 * INSTALL_TIMEOUT
POLICY = "most-free"

OUT_DIR = os.getenv("HIERMON_OUT_DIR", "out")
SCENARIO_DIR = os.getenv("HIERMON_SCENARIO_DIR",
                         os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scenarios"))
# older names still accepted for bundled scenarios and topology presets
ALIASES: Dict[str, str] = {"paper-7node": "seven-node"}
LOG_LEVEL = os.getenv("HIERMON_LOG_LEVEL", "WARNING")


@dataclass
class Settings:
    """Deployment-wide knobs that are not part of a single host's spec."""
    registration_refresh: int = REGISTRATION_REFRESH
    registration_ttl: int = REGISTRATION_TTL
    discovery_delay: int = DISCOVERY_DELAY
    install_timeout: int = INSTALL_TIMEOUT
    allocation_timeout: int = ALLOCATION_TIMEOUT
    request_timeout: int = REQUEST_TIMEOUT
    policy: str = POLICY
    disabled_domains: Tuple[str, ...] = ()
    capacity: Dict[str, int] = field(default_factory=lambda: dict(CAPACITY))
