"""
Cache file format.

One line per evaluated point, in insertion order:

    x_1 ... x_n | f c_1 ... c_m | status

Coordinates and values use the shortest decimal text that reads back to the
same double, so a cache file reloads to an identical cache.
"""

import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

from madsopt.errors import OutputError
from madsopt.eval.cache import EvalCache
from madsopt.schemas.evaluation import EvalStatus, Evaluation, Point
from madsopt.utils.numeric import format_float

CacheEntry = Tuple[Point, Evaluation]


def format_cache_line(x: Point, e: Evaluation) -> str:
    """Render one cache entry."""
    coords = " ".join(format_float(v) for v in x)
    values = " ".join(format_float(v) for v in (e.f, *e.c))
    return f"{coords} | {values} | {e.status.value}"


def parse_cache_line(line: str, n: Optional[int] = None, m: Optional[int] = None) -> CacheEntry:
    """
    Parse one cache entry.
    
    Raises:
        ValueError: On a malformed line or a dimension mismatch
    """
    parts = [part.strip() for part in line.split("|")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 '|'-separated fields, got {len(parts)}")
    x = tuple(float(token) for token in parts[0].split())
    values = [float(token) for token in parts[1].split()]
    status = EvalStatus(parts[2])
    if not values:
        raise ValueError("missing objective value")
    if n is not None and len(x) != n:
        raise ValueError(f"expected {n} coordinates, got {len(x)}")
    if m is not None and len(values) != m + 1:
        raise ValueError(f"expected {m + 1} output values, got {len(values)}")
    return x, Evaluation(f=values[0], c=tuple(values[1:]), status=status)


def atomic_write_text(path: Path | str, text: str) -> None:
    """
    Replace a file atomically (temporary file in the same directory + rename).
    
    Raises:
        OutputError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc


def write_cache_file(path: Path | str, entries: Iterable[CacheEntry]) -> None:
    """Write cache entries atomically."""
    lines = [format_cache_line(x, e) for x, e in entries]
    atomic_write_text(path, "".join(f"{line}\n" for line in lines))


def read_cache_file(path: Path | str, n: Optional[int] = None, m: Optional[int] = None) -> List[CacheEntry]:
    """
    Read cache entries in file order.
    
    Args:
        path: Cache file
        n: Expected dimension
        m: Expected number of constraints
        
    Returns:
        List[CacheEntry]: Entries; an absent file reads as empty
        
    Raises:
        OutputError: If the file cannot be read or a line is malformed
    """
    path = Path(path)
    if not path.exists():
        return []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entries.append(parse_cache_line(line, n, m))
        except ValueError as exc:
            raise OutputError(path, f"line {lineno}: {exc}") from exc
    return entries


def load_cache(path: Path | str, n: Optional[int] = None, m: Optional[int] = None) -> EvalCache:
    """Cache filled from a cache file."""
    cache = EvalCache(m)
    for x, e in read_cache_file(path, n, m):
        cache.insert(x, e)
    return cache


def save_cache(path: Path | str, cache: EvalCache) -> None:
    """Write a cache atomically."""
    write_cache_file(path, cache.items())
