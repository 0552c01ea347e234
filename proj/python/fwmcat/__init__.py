"""Python interface to the fwmcat truncated Fock-space simulator."""

from ._fwmcat import *  # noqa: F401,F403
from ._fwmcat import ConfigError, NumericalError, UndefinedError  # noqa: F401

__version__ = "0.1.0"
