import sys

from radartrack.harness.cli import main

sys.exit(main())
