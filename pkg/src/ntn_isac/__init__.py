"""UAV and HIBS integrated sensing and communication simulator for
post-disaster coverage, with a terrestrial failure benchmark."""
from .config import ConfigError, SimConfig, load_config, preset
from .engine import RunSummary, run, sweep_gamma

__version__ = "0.1.0"

__all__ = ["ConfigError", "RunSummary", "SimConfig", "load_config", "preset", "run",
           "sweep_gamma", "__version__"]
