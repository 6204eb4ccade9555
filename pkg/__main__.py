"""Entry point for gapdyn."""

import sys
from gapdyn import main

if __name__ == "__main__":
    sys.exit(main())
