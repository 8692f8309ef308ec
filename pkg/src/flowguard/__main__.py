import sys

from flowguard.cli.main import main

sys.exit(main())
