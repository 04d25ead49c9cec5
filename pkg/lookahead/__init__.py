"""Root of the lookahead API.

The entire public API is available at root level:

   >>> import lookahead
   >>> lookahead.TabularMDP, lookahead.cr_worst_expectations, ...
"""
import logging

from .__about__ import *  # noqa
from .envs import *  # noqa
from .errors import *  # noqa
from .experiments import *  # noqa
from .mdp import *  # noqa
from .ratio import *  # noqa
from .reach import *  # noqa
from .simplex import *  # noqa
from .simulation import *  # noqa
from .value import *  # noqa

from . import envs, experiments, ratio, simulation  # isort:skip

logging.getLogger(__name__).addHandler(logging.NullHandler())
