import sys

from mixmin.cli import main

sys.exit(main())
