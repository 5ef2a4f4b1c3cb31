#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
agentcredit Setup
"""
import re

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

# agentcredit.base imports Colr, so the version is read as text.
with open('agentcredit/base.py', 'r') as f:
    __version__ = re.search(
        r"^__version__ = '([^']+)'",
        f.read(),
        re.MULTILINE,
    ).group(1)

# Try using the latest DESC.txt.
shortdesc = 'Per-agent credit attribution for cooperative multi-agent teams.'
try:
    with open('DESC.txt', 'r') as f:
        shortdesc = f.read().strip()
except FileNotFoundError:
    pass

# Default README files to use for the longdesc.
readmefiles = ('docs/README.rst', 'README.md')
for readmefile in readmefiles:
    try:
        with open(readmefile, 'r') as f:
            longdesc = f.read()
        break
    except EnvironmentError:
        # File not found or failed to read.
        pass
else:
    longdesc = shortdesc

setup(
    name='agentcredit',
    version=__version__,
    packages=['agentcredit'],
    description=shortdesc,
    long_description=longdesc,
    keywords=(
        'python multi-agent reinforcement learning credit attribution '
        'shapley agent importance'
    ),
    python_requires='>=3.8',
    install_requires=[
        'Colr>=0.9.1',
        'docopt>=0.6.2',
        'easysettings>=4.0.0',
        'numpy>=1.20',
        'pandas>=1.5',
        'printdebug>=0.3.0',
    ],
    tests_require=[
        'green>=2.5.0',
    ],
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    entry_points={
        'console_scripts': [
            'agentcredit = agentcredit.__main__:entry_point',
        ]
    }
)
