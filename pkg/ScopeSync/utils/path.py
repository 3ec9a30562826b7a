import hashlib
import os
from pathlib import Path


def str_is_path(p: str):
    """Detects if the variable contains absolute paths.
    Args:
        p: the Path
    Returns:
        True is is an absolute path
    """
    try:
        path = Path(p)
        if path.is_absolute():
            return True
        else:
            return False
    except TypeError:
        return False


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_chunks(chunks) -> str:
    """Digest of the concatenation of ``chunks``."""
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(chunk)
    return digest.hexdigest()


def atomic_write_bytes(path, data: bytes):
    """Write next to ``path`` then rename over it, so readers never see a partial file.
    Args:
        path: destination file
        data: full content
    """
    path = Path(path)
    tmp = path.with_name(f'.{path.name}.tmp')
    with open(tmp, 'wb') as handle:
        handle.write(data)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode('utf-8'))
