from argparse import ArgumentParser

import csv
import io
import numbers
import os
import sys


CSV_FORMAT = '{:.12g}'


class CommandError(Exception):
    """Indicates a problem while executing a `Command`

    If this exception is raised during the execution of a command, it
    will be caught and turned into a nicely-printed error message to the
    appropriate output stream (i.e., stderr); as a result, raising this
    exception (with a sensible description of the error) is the preferred
    way to indicate that something has gone wrong in the execution of a
    command.

    The process exits with `exit_code` (1 unless a subclass says otherwise).
    """
    exit_code = 1

    def __init__(self, msg='', exit_code=None):
        super(CommandError, self).__init__(msg)
        self.msg = msg
        if exit_code is not None:
            self.exit_code = exit_code


class PostSelectionExhausted(CommandError):
    """Every permitted attempt was rejected by post-selection"""
    exit_code = 2


class BaseCommand(object):
    """Command line entry point shared by the gkplab subcommands

    `run_from_argv()` parses the arguments with the parser from
    `create_parser()` and hands them to `execute()`, which records the
    dry-run and verbosity settings and calls `handle()`. A `CommandError`
    raised on the way is printed to stderr as one line and the process
    exits with the error's `exit_code`; `--traceback` re-raises it instead.

    Subclasses add their options in `add_arguments()` and do the work in
    `handle()`.
    """
    help = ''

    def __init__(self, stdout=None, stderr=None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self.dryrun = False
        self.verbosity = 1

    def add_arguments(self, parser):
        """Entry point for subclassed commands to add custom arguments"""
        pass

    def create_parser(self, prog_name):
        """Create and return the `ArgumentParser` to parse arguments"""
        parser = ArgumentParser(
            prog=os.path.basename(prog_name),
            description=self.help or None,
        )
        parser.add_argument(
            '-d', '--dryrun',
            action='store_true',
            default=False,
            dest='dryrun',
            help='Validate and report what would run without writing files',
        )
        parser.add_argument(
            '--traceback',
            action='store_true',
            help='Raise on CommandError exceptions',
        )
        parser.add_argument(
            '-v', '--verbosity',
            action='store',
            choices=[0, 1, 2, 3],
            default=1,
            dest='verbosity',
            help='Verbosity level; 0=minimal output, 1=normal output, '
                 '2=every step, 3=every branch',
            type=int,
        )
        self.add_arguments(parser)
        return parser

    def execute(self, **options):
        """Record the common options and run `handle()`"""
        self.dryrun = options.get('dryrun', False)
        self.verbosity = options.get('verbosity', 1)
        output = self.handle(**options)
        if output:
            self.stdout.write(output)
        return output

    def handle(self, **options):
        """The work of the command; subclasses must implement it"""
        raise NotImplementedError(
            'Subclasses of BaseCommand must provide a handle() method'
        )

    def run_from_argv(self, argv):
        """Parse `argv` and run, turning a `CommandError` into an exit code"""
        options = vars(self.create_parser(argv[0]).parse_args(argv[1:]))
        traceback = options.pop('traceback')
        try:
            self.execute(**options)
        except CommandError as e:
            if traceback:
                raise
            self.stderr.write('%s: %s\n' % (e.__class__.__name__, e))
            sys.exit(e.exit_code)


class Tool(object):
    dryrun = False
    verbosity = 1

    def save(self, path, content, indent=4):
        """Write a text file unless this is a dry run

        Files are always written with LF line endings so that repeated
        runs produce byte-identical output.

        Arguments:
            path {string} -- Complete path of the file to write
            content {string} -- Text to place in the file

        Keyword Arguments:
            indent {integer} -- Number of spaces to indent the process
                                statements (default: {4})

        Returns:
            {string} -- the path that was (or would have been) written
        """
        self.write('{}{}Write file: {}'.format(
            'DryRun: ' if self.dryrun else '',
            ' ' * indent,
            path,
        ), verbosity=2)
        if not self.dryrun:
            folder = os.path.dirname(path)
            if folder and not os.path.isdir(folder):
                os.makedirs(folder)
            with open(path, 'w', newline='\n') as out_file:
                out_file.write(content)
        return path

    def write(self, msg, end='\n', verbosity=1):
        """Output text to standard output

        `msg` is only output if `self.verbosity` is greater than or equal
        to `verbosity`.

        Arguments:
            msg {string} -- Message to be output

        Keyword Arguments:
            end {string} -- String ending character to be used rather than
                            a carriage return (default: {'\n'})
            verbosity {integer} -- What verbosity level the tool must
                                   be running at for the message to be
                                   output (default: {1})
        """
        if self.verbosity >= verbosity:
            print(msg, end=end)


def csv_text(header, rows):
    """CSV with a header row, '.' decimals, LF endings and 12 digits

    Arguments:
        header {list} -- column names
        rows {iterable} -- rows of values; reals use `CSV_FORMAT`

    Returns:
        {string} -- the CSV document
    """
    def cell(value):
        if isinstance(value, bool) or isinstance(value, numbers.Integral):
            return str(value)
        if isinstance(value, numbers.Real):
            return CSV_FORMAT.format(float(value))
        return str(value)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell(value) for value in row])
    return buffer.getvalue()
