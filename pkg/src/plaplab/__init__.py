"""Numerical lab for the graph p-Laplacian and blow-up of u_t - Delta_p u >= sigma f(u)."""
from ._kernels import BACKEND
from .certificates import *  # noqa: F401,F403
from .config import ExperimentConfig, config_hash, load_config, parse_config
from .dynamics import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .graph import *  # noqa: F401,F403
from .plap import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403

__version__ = "0.1.0"
