"""Run the command-line interface with ``python -m zeno_arrival``."""

import sys

from .cli import main

sys.exit(main())
