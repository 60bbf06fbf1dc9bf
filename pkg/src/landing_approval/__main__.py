import sys

from landing_approval.cli import main

sys.exit(main())
