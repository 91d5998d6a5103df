import sys

from rdars.cli import main

sys.exit(main())
