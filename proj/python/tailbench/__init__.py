"""Heavy-tail analysis of SGD on ridge-regression losses.

Thin Python layer over the C++ core: dataset preparation, SGD ensembles,
diffusion simulators, closed-form tail-index bounds, and the distributional
test suite (t / alpha-stable fits, Kolmogorov-Smirnov).
"""

from ._tailbench import *  # noqa: F401,F403
from ._tailbench import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
