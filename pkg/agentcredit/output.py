#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/output.py
    Writing result files. Every file is written to a temporary file in the
    target directory first, then renamed over the target.

    The MIT License (MIT)
"""
import io
import os
import tempfile

import pandas as pd

__all__ = [
    'atomic_write',
    'frame_to_csv',
    'write_csv',
]


def atomic_write(path, content):
    """ Write `content` (str or bytes) to `path` atomically.
        Missing parent directories are created.
    """
    dirpath = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirpath, exist_ok=True)
    if isinstance(content, str):
        content = content.encode('utf-8')
    fd, tmppath = tempfile.mkstemp(
        prefix='.{}.'.format(os.path.basename(path)),
        suffix='.tmp',
        dir=dirpath,
    )
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(content)
        os.replace(tmppath, path)
    except BaseException:
        try:
            os.remove(tmppath)
        except OSError:
            pass
        raise
    return path


def frame_to_csv(frame):
    """ Render a DataFrame as CSV text, without the index. """
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator='\n')
    return buf.getvalue()


def write_csv(path, rows, columns):
    """ Write records (dicts, tuples, or a DataFrame) as a CSV file with
        exactly `columns`, in that order.
    """
    if isinstance(rows, pd.DataFrame):
        frame = rows.reindex(columns=list(columns))
    else:
        frame = pd.DataFrame(list(rows), columns=list(columns))
    return atomic_write(path, frame_to_csv(frame))
