#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" runtests.py
    Shortcut to `green -vv -q ARGS...` for the agentcredit tests,
    with an option to include the slow acceptance tests.
"""

import os
import re
import subprocess
import sys
import unittest

from green import __version__ as green_version
from colr import (
    auto_disable as colr_auto_disable,
    docopt,
    Colr as C,
)

from agentcredit import __version__ as app_version

colr_auto_disable()

APPNAME = 'agentcredit'
NAME = '{} Test Runner'.format(APPNAME)
VERSION = '0.3.0'
VERSIONSTR = '{} v. {}'.format(NAME, VERSION)
SCRIPT = os.path.split(os.path.abspath(sys.argv[0]))[1]
SCRIPTDIR = os.path.abspath(sys.path[0])

# Environment variable that enables the acceptance tests.
SLOW_VAR = 'AGENTCREDIT_SLOW'

USAGESTR = """{versionstr}
    Runs tests using `green` and provides a little more info.

    Usage:
        {script} -h | -v
        {script} [-d] [-S] [-s] [-r]
        {script} [-d] [-S] [-s] [-r] TESTS...
        {script} -l [PATTERN...]

    Options:
        PATTERN              : Regex/text pattern to match against test names.
        TESTS                : Test names for `green`.
        -d,--dryrun          : Just show test names.
        -h,--help            : Show this help message.
        -l,--list            : List all test cases/names.
        -r,--run-coverage    : Run coverage.
        -S,--slow            : Include the slow acceptance tests.
        -s,--stdout          : Allow stdout (removes -q from green args).
        -v,--version         : Show version.
""".format(script=SCRIPT, versionstr=VERSIONSTR)


def main(argd):
    """ Main entry point, expects docopt arg dict as argd. """
    if argd['--list']:
        patterns = [try_repat(s) for s in argd['PATTERN']]
        return list_tests(patterns=patterns)

    green_args = parse_test_names(argd['TESTS']) or ['test']
    if argd['--dryrun']:
        return print_test_names(green_args)
    cmd = ['green', '-vv']
    if not argd['--stdout']:
        cmd.append('-q')
    if argd['--run-coverage']:
        cmd.append('-r')
    cmd.extend(green_args)

    env = dict(os.environ)
    if argd['--slow']:
        env[SLOW_VAR] = '1'
    print_header(cmd, slow=argd['--slow'])
    return subprocess.run(cmd, env=env).returncode


def iter_test_names(package='test'):
    """ Yield full test names (module.Case.test_name) from the test dir. """
    loader = unittest.TestLoader()
    suite = loader.discover(package, top_level_dir=SCRIPTDIR)
    stack = [suite]
    while stack:
        item = stack.pop(0)
        if isinstance(item, unittest.TestSuite):
            stack[:0] = list(item)
        else:
            yield item.id()


def list_tests(patterns=None):
    """ List all discoverable tests, optionally filtered by patterns. """
    count = 0
    for testname in iter_test_names():
        if patterns and not any(p.search(testname) for p in patterns):
            continue
        module, _, rest = testname.rpartition('.')[0].rpartition('.')
        print(C('.').join(
            C(module, 'blue', style='bright'),
            C(rest, 'cyan'),
            C(testname.rpartition('.')[-1], 'green'),
        ))
        count += 1
    return 0 if count else 1


def parse_test_names(names):
    """ Prepend 'test.' to test names without it. """
    return [
        name if name.startswith('test.') else 'test.{}'.format(name)
        for name in names
    ]


def print_err(*args, **kwargs):
    """ A wrapper for print() that uses stderr by default. """
    if kwargs.get('file', None) is None:
        kwargs['file'] = sys.stderr
    print(C(kwargs.get('sep', ' ').join(str(a) for a in args), 'red'), **kwargs)


def print_header(cmd, slow=False):
    """ Print the agentcredit and green versions being used. """
    print(C(' ').join(
        C('Testing', 'cyan'),
        C(APPNAME, 'blue', style='bright'),
        C('v. {}'.format(app_version), 'blue'),
        C('using', 'cyan'),
        C('Green v. {}'.format(green_version), 'blue'),
        C(' '.join(cmd), 'green').join('(', ')', style='bright'),
    ))
    if slow:
        print(C('Including acceptance tests ({}=1).'.format(SLOW_VAR), 'yellow'))


def print_test_names(names):
    """ Print formatted test names. """
    print(C(':').join(
        C('Parsed test names', 'cyan'),
        C(len(names), 'blue', style='bright'),
    ))
    for name in names:
        print(C(name, 'blue'))
    return 0 if names else 1


def try_repat(s):
    """ Compile a case-insensitive regex pattern, or raise InvalidArg. """
    try:
        return re.compile(s, flags=re.IGNORECASE)
    except re.error as ex:
        raise InvalidArg('Invalid pattern: {}\n{}'.format(s, ex))


class InvalidArg(ValueError):
    """ Raised when the user has used an invalid argument. """
    def __init__(self, msg=None):
        self.msg = msg or ''

    def __str__(self):
        if self.msg:
            return 'Invalid argument, {}'.format(self.msg)
        return 'Invalid argument!'


if __name__ == '__main__':
    try:
        mainret = main(docopt(USAGESTR, version=VERSIONSTR, script=SCRIPT))
    except InvalidArg as ex:
        print_err(ex)
        mainret = 1
    except (EOFError, KeyboardInterrupt):
        print_err('\nUser cancelled.\n')
        mainret = 2
    except BrokenPipeError:
        print_err('\nBroken pipe, input/output was interrupted.\n')
        mainret = 3
    sys.exit(mainret)
