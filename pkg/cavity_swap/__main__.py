import sys

from cavity_swap.cli import main

if __name__ == "__main__":
    sys.exit(main())
