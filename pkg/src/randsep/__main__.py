import sys

from randsep.cli import main

sys.exit(main())
