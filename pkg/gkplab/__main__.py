from gkplab.runner import Command

import sys


def main():
    cmd = Command()
    cmd.run_from_argv(sys.argv)


if __name__ == '__main__':
    main()
