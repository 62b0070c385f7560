from ._lodbox import *  # noqa: F401,F403
