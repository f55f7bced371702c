import sys

from finslerkit.cli import main

sys.exit(main())
