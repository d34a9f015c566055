from .config import ConfigManager, load_config
from .logging import setup_logging, get_logger

__all__ = ['ConfigManager', 'load_config', 'setup_logging', 'get_logger']
