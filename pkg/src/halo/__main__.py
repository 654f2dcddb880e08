import sys

from halo.cli import dispatch


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
