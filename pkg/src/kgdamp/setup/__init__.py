from .base import BaseSetup  # noqa
from .single import SingleSetup, build_initial_data, run_config  # noqa
from .sweep import SweepSetup  # noqa
