import sys

from bicheck.cli import main

sys.exit(main())
