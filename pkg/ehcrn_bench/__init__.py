# -*- coding: Utf-8 -*

from .ehcrn_bench import main, build_parser, load_config, cmd_solve_single, cmd_solve_multi, cmd_sweep, cmd_oracle_check
from .settings import RunConfig, ConfigError
from .version import __version__
