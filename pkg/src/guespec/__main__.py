import sys

from guespec.cli import main

sys.exit(main())
