"""
Thread-safe evaluation budgets.
"""

import threading
from typing import Optional


class EvalBudget:
    """Count of blackbox evaluations allowed, shared by every lane that holds it."""
    
    def __init__(self, limit: int, used: int = 0, parent: Optional["EvalBudget"] = None):
        """
        Initialize a budget.
        
        Args:
            limit: Maximum number of evaluations
            used: Evaluations already spent (warm starts count cached points)
            parent: Budget that must also allow every consumption
        """
        self._lock = threading.Lock()
        self.limit = limit
        self._used = used
        self.parent = parent
    
    @property
    def used(self) -> int:
        """Evaluations consumed."""
        with self._lock:
            return self._used
    
    @property
    def remaining(self) -> int:
        """Evaluations still allowed, parent included."""
        with self._lock:
            own = max(0, self.limit - self._used)
        if self.parent is not None:
            return min(own, self.parent.remaining)
        return own
    
    @property
    def exhausted(self) -> bool:
        """True when no evaluation is left."""
        return self.remaining <= 0
    
    def try_consume(self, k: int = 1) -> bool:
        """
        Reserve k evaluations atomically.
        
        Returns:
            bool: False (and nothing consumed) when fewer than k remain
        """
        with self._lock:
            if self._used + k > self.limit:
                return False
            if self.parent is not None and not self.parent.try_consume(k):
                return False
            self._used += k
            return True
    
    def refund(self, k: int = 1) -> None:
        """Give back evaluations reserved for points that were not evaluated."""
        with self._lock:
            self._used -= k
        if self.parent is not None:
            self.parent.refund(k)
    
    def extend(self, limit: int) -> None:
        """Change the limit (hot and warm restarts)."""
        with self._lock:
            self.limit = limit
    
    def child(self, limit: int) -> "EvalBudget":
        """Session budget bounded by this one."""
        return EvalBudget(limit, parent=self)
