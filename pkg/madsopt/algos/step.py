"""
Start/Run/End component execution model.

Every algorithm component (Mads, Initialization, Iteration, a search, the
poll) is a Step. Executing a Step runs its start, run and end hooks in that
order; hooks may execute nested Steps, which gives a depth-first traversal.
"""

from typing import List, Optional


class Step:
    """Base algorithm component; the default hooks do nothing."""
    
    name = "Step"
    
    def __init__(self, parent: Optional["Step"] = None):
        self.parent = parent
    
    @property
    def path(self) -> str:
        """Component path from the root, e.g. 'Mads > Iteration > Poll'."""
        names: List[str] = []
        step: Optional[Step] = self
        while step is not None:
            names.append(step.name)
            step = step.parent
        return " > ".join(reversed(names))
    
    def start(self) -> None:
        """Prepare the component (generate trial points, launch nested components)."""
    
    def run(self) -> None:
        """Main task of the component."""
    
    def end(self) -> None:
        """Post-processing and display."""
    
    def execute(self) -> None:
        """Run start, run and end through run_step."""
        run_step(self)


def run_step(s: Step) -> None:
    """
    Execute a Step: start, then run, then end.
    
    Errors propagate unchanged with a note naming the innermost component
    path where they were raised.
    
    Args:
        s: Step to execute
    """
    try:
        s.start()
        s.run()
        s.end()
    except Exception as exc:
        if not getattr(exc, "__madsopt_path__", None):
            exc.add_note(f"in component {s.path}")
            try:
                exc.__madsopt_path__ = s.path
            except AttributeError:
                pass
        raise
