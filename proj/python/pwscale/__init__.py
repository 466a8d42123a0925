try:
    from ._pwscale import *  # noqa: F401,F403
    from ._pwscale import __doc__  # noqa: F401
except ImportError:
    from _pwscale import *  # noqa: F401,F403
    from _pwscale import __doc__  # noqa: F401
