"""Atomic file replacement: write to a sibling temp file, then rename over the target"""

import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

logger = logging.getLogger(__name__)


@contextmanager
def atomic_path(path: Path) -> Iterator[Path]:
    """
    Yield a temporary path next to ``path``; on success it replaces ``path``

    Readers never observe a half-written file. On error the temp file is
    removed and the previous content (if any) is left untouched.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    tmp = Path(tmp_name)
    try:
        yield tmp
        os.replace(tmp, path)
        logger.debug(f"Wrote {path}")
    finally:
        if tmp.exists():
            tmp.unlink()
