import sys

from spikecp.cli import main

sys.exit(main())
