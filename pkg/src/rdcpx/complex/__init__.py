"""Finite directed complexes with their inflate, merge and marked layers."""

from .cells import *  # noqa: F401,F403
from .cells import __all__ as _cells_all
from .inflate import *  # noqa: F401,F403
from .inflate import __all__ as _inflate_all

__all__ = list(_cells_all) + list(_inflate_all)
from .merge import *  # noqa: F401,F403,E402
from .merge import __all__ as _merge_all  # noqa: E402

__all__ += list(_merge_all)
from .marked import *  # noqa: F401,F403,E402
from .marked import __all__ as _marked_all  # noqa: E402

__all__ += list(_marked_all)
