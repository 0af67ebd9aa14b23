"""Allow `python -m tlcontrol ...` as an alias for the console script."""

from .cli import main

raise SystemExit(main())
