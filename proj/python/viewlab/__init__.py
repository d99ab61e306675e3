"""Python access to the viewlab C++ core."""

from ._viewlab import *  # noqa: F401,F403
from ._viewlab import __doc__  # noqa: F401
