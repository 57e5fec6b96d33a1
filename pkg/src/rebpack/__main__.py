import sys

from rebpack.cli import main

sys.exit(main())
