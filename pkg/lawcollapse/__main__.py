"""Allow ``python -m lawcollapse``."""

from lawcollapse.main import run

run()
