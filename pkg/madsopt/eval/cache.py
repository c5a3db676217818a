"""
Evaluation cache for data access operations.

The cache is the only structure shared between concurrent evaluation lanes.
Every access goes through one lock, which makes insert, lookup and claim
linearizable.
"""

import threading
from typing import Dict, Iterator, List, Optional, Set, Tuple

import numpy as np

from madsopt.schemas.evaluation import Evaluation, EvalStatus, Point


class EvalCache:
    """Map from exact coordinate sequences to evaluations."""
    
    def __init__(self, m: Optional[int] = None):
        """
        Initialize an empty cache.
        
        Args:
            m: Number of constraints, used to size the array views; inferred from
                the first insert when omitted
        """
        self._lock = threading.Lock()
        self._entries: Dict[Point, Evaluation] = {}
        self._order: List[Point] = []
        self._claimed: Set[Point] = set()
        self._m = m
        self._buffers: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None
        self._filled = 0
    
    def __len__(self) -> int:
        with self._lock:
            return len(self._order)
    
    def __contains__(self, x: Point) -> bool:
        with self._lock:
            return x in self._entries
    
    def lookup(self, x: Point) -> Optional[Evaluation]:
        """
        Exact-match lookup.
        
        Args:
            x: Point coordinates
            
        Returns:
            Optional[Evaluation]: Cached evaluation, None when never evaluated
        """
        with self._lock:
            return self._entries.get(x)
    
    def claim(self, x: Point) -> bool:
        """
        Reserve a point for evaluation.
        
        Args:
            x: Point coordinates
            
        Returns:
            bool: False when the point is cached or already claimed by another lane
        """
        with self._lock:
            if x in self._entries or x in self._claimed:
                return False
            self._claimed.add(x)
            return True
    
    def release(self, x: Point) -> None:
        """Drop a claim without inserting an evaluation."""
        with self._lock:
            self._claimed.discard(x)
    
    def insert(self, x: Point, e: Evaluation) -> bool:
        """
        Insert an evaluation and release any claim on the point.
        
        Args:
            x: Point coordinates
            e: Evaluation
            
        Returns:
            bool: False (no-op) when the point is already present
        """
        with self._lock:
            self._claimed.discard(x)
            if x in self._entries:
                return False
            self._entries[x] = e
            self._order.append(x)
            if self._m is None:
                self._m = len(e.c)
            return True
    
    def items(self) -> List[Tuple[Point, Evaluation]]:
        """Snapshot of the entries in insertion order."""
        with self._lock:
            return [(x, self._entries[x]) for x in self._order]
    
    def __iter__(self) -> Iterator[Tuple[Point, Evaluation]]:
        return iter(self.items())
    
    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Read-only array view of the cache in insertion order.
        
        Rows are appended to buffers that double when full, so each entry is
        converted once.
        
        Returns:
            Tuple of (points (N, n), f (N,), c (N, m), ok (N,))
        """
        with self._lock:
            new = [(x, self._entries[x]) for x in self._order[self._filled:]]
            if new or self._buffers is None:
                self._append_rows(new)
            count = self._filled
            views = tuple(buffer[:count] for buffer in self._buffers)
        for view in views:
            view.flags.writeable = False
        return views
    
    def _append_rows(self, new: List[Tuple[Point, Evaluation]]) -> None:
        m = self._m or 0
        if self._buffers is None:
            n = len(new[0][0]) if new else 0
            self._buffers = (
                np.empty((0, n)), np.empty(0), np.empty((0, m)), np.empty(0, dtype=bool)
            )
        points, f, c, ok = self._buffers
        needed = self._filled + len(new)
        if needed > len(f):
            capacity = max(needed, 2 * len(f), 64)
            n = len(new[0][0]) if points.shape[1] == 0 and new else points.shape[1]
            grown = (
                np.empty((capacity, n)), np.empty(capacity), np.empty((capacity, m)), np.empty(capacity, dtype=bool)
            )
            if self._filled:
                for old, buffer in zip(self._buffers, grown):
                    buffer[:self._filled] = old[:self._filled]
            points, f, c, ok = self._buffers = grown
        for row, (x, e) in enumerate(new, start=self._filled):
            points[row] = x
            f[row] = e.f
            c[row] = e.c
            ok[row] = e.status == EvalStatus.OK
        self._filled = needed
