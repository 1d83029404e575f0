import sys

from cowherd.cli import main

sys.exit(main())
