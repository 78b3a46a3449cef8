import sys

from .cli_experiments import main


if __name__ == '__main__':
    sys.exit(main())
