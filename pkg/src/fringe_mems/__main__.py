import sys

from fringe_mems.cli import main

sys.exit(main())
