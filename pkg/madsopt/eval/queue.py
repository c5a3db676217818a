"""
Evaluation queue with ordering strategies.

The queue is a sorted list rather than a heap: points arrive in bursts (one
burst per search or poll), and the list is re-sorted once per burst.
"""

import itertools
from typing import Iterator, List, Optional, Set, Tuple

import numpy as np

from madsopt.eval.cache import EvalCache
from madsopt.schemas.evaluation import Point
from madsopt.schemas.params import OrderingStrategy
from madsopt.schemas.trial import TrialPoint
from madsopt.utils.numeric import cosine_similarity


class EvalQueue:
    """Pending trial points, ordered by the active strategy."""
    
    def __init__(
        self,
        strategy: OrderingStrategy = OrderingStrategy.LAST_SUCCESS_DIRECTION,
        rng: Optional[np.random.Generator] = None,
    ):
        """
        Initialize an empty queue.
        
        Args:
            strategy: Ordering strategy
            rng: Generator used by the RANDOM strategy
        """
        self.strategy = strategy
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.last_success_direction: Optional[Point] = None
        self._items: List[Tuple[int, TrialPoint]] = []
        self._pending: Set[Point] = set()
        self._counter = itertools.count()
    
    def __len__(self) -> int:
        return len(self._items)
    
    def __iter__(self) -> Iterator[TrialPoint]:
        return (t for _, t in self._items)
    
    def __contains__(self, x: Point) -> bool:
        return x in self._pending
    
    def push(self, t: TrialPoint, cache: EvalCache) -> bool:
        """
        Enqueue a trial point unless it was evaluated or is already pending.
        
        Args:
            t: Trial point
            cache: Evaluation cache
            
        Returns:
            bool: Whether the point was enqueued
        """
        if t.point in self._pending or cache.lookup(t.point) is not None:
            return False
        self._items.append((next(self._counter), t))
        self._pending.add(t.point)
        return True
    
    def sort(self) -> "EvalQueue":
        """Order the pending points by the active strategy (ties by insertion)."""
        if self.strategy == OrderingStrategy.GENERATION_ORDER:
            self._items.sort(key=lambda item: item[0])
        elif self.strategy == OrderingStrategy.LEXICOGRAPHIC:
            self._items.sort(key=lambda item: (item[1].point, item[0]))
        elif self.strategy == OrderingStrategy.RANDOM:
            self._items.sort(key=lambda item: item[0])
            order = self.rng.permutation(len(self._items))
            self._items = [self._items[i] for i in order]
        else:
            self._items.sort(key=self._direction_key)
        return self
    
    def _direction_key(self, item: Tuple[int, TrialPoint]):
        counter, t = item
        if self.last_success_direction is None or t.gen_direction is None:
            return (1, 0.0, counter)
        cosine = cosine_similarity(
            np.asarray(t.gen_direction), np.asarray(self.last_success_direction)
        )
        return (0, -cosine, counter)
    
    def pop(self) -> Optional[TrialPoint]:
        """Remove and return the first pending point."""
        if not self._items:
            return None
        _, t = self._items.pop(0)
        self._pending.discard(t.point)
        return t
    
    def clear(self) -> int:
        """
        Drop every pending point.
        
        Returns:
            int: Number of points dropped
        """
        dropped = len(self._items)
        self._items.clear()
        self._pending.clear()
        return dropped


def queue_push(q: EvalQueue, cache: EvalCache, t: TrialPoint) -> bool:
    """Enqueue t iff it is neither cached nor pending."""
    return q.push(t, cache)


def queue_sort(q: EvalQueue) -> EvalQueue:
    """Sort the queue by its strategy."""
    return q.sort()


def group_dispatch(q: EvalQueue, max_group_size: int, limit: Optional[int] = None) -> List[List[TrialPoint]]:
    """
    Split the head of the queue into evaluation groups.
    
    Args:
        q: Queue (the dispatched points are popped)
        max_group_size: Maximum number of points per group
        limit: Maximum number of points to dispatch overall
        
    Returns:
        List[List[TrialPoint]]: Consecutive groups; the last one may be partial
    """
    if max_group_size < 1:
        raise ValueError(f"max_group_size must be >= 1, got {max_group_size}")
    total = len(q) if limit is None else min(limit, len(q))
    batches: List[List[TrialPoint]] = []
    while total > 0:
        size = min(max_group_size, total)
        batches.append([q.pop() for _ in range(size)])
        total -= size
    return batches
