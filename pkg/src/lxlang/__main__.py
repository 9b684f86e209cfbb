import sys

from lxlang.cli import main

sys.exit(main())
