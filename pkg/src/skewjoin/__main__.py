import sys

from skewjoin.cli import main

sys.exit(main())
