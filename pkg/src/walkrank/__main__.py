import sys

from walkrank.cli import main

sys.exit(main())
