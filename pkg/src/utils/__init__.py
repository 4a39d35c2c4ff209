"""
Utils module for the qroute toolkit
"""
from .logger import get_logger
from .config import Settings, load_settings

__all__ = ['get_logger', 'Settings', 'load_settings']
