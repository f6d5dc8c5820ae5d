import sys

from bridgeblock.cli import main

sys.exit(main())
