"""``python -m cgenlab``."""

from cgenlab.cli.main import main

raise SystemExit(main())
