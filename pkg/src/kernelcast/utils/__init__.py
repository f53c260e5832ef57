from .logging import setup_logging
from .parallel import ordered_map, worker_count
from .rng import stream

__all__ = ["ordered_map", "setup_logging", "stream", "worker_count"]
