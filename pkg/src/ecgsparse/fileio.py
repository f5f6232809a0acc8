"""Atomic file writes shared by the binary formats and the CLI.

Writes go to a temp file in the destination directory followed by
os.replace, so a failed run never leaves a partial artifact behind.
"""

import os
import tempfile
from pathlib import Path


def atomic_write_bytes(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))
