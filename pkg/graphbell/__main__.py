import sys

from graphbell.cli import main

sys.exit(main())
