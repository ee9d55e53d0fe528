import sys

from jetbalance.cli import main

sys.exit(main())
