import sys

from app.epinet_cli import main


if __name__ == "__main__":
    sys.exit(main())
