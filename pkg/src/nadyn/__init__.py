"""Mixed quantum-classical dynamics on 1-D two-state models.

Engines: fewest-switches surface hopping (fssh), pair-state walker dynamics
with weight reweighting (qcle), and an exact split-operator grid reference
(wavepacket). The ensemble module runs seeded, reproducible ensembles and
writes CSV time series; the nadyn CLI wraps it.
"""

from .config import RunConfig, emit_config, parse_config
from .ensemble import run, sample_initial_conditions
from .errors import ConfigError, DynamicsError
from .fssh import rng_for_trajectory, run_fssh
from .models import make_model
from .qcle import run_qcle
from .wavepacket import analyze, init_packet, propagate

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DynamicsError", "RunConfig", "analyze", "emit_config",
    "init_packet", "make_model", "parse_config", "propagate",
    "rng_for_trajectory", "run", "run_fssh", "run_qcle",
    "sample_initial_conditions", "__version__",
]
