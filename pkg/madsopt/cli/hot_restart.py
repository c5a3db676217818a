"""
Hot restart: change parameters of a run in progress.

The configured signal only sets a flag. The run checks the flag at every
iteration boundary, once the evaluations in flight have completed, then
re-reads the parameter file and applies the mutable parameters.
"""

import logging
import signal
import threading
from pathlib import Path
from typing import Optional

from madsopt.algos.mads import Mads
from madsopt.cli.params_file import build_params, immutable_changes, read_param_file
from madsopt.errors import ImmutableParamChanged, MadsError
from madsopt.schemas.params import Params
from madsopt.settings import settings

logger = logging.getLogger(__name__)


class HotRestart:
    """Iteration callback applying parameter file changes on request."""
    
    def __init__(self, param_path: Path | str, **overrides):
        """
        Initialize the handler.
        
        Args:
            param_path: Parameter file re-read on each request
            **overrides: Command-line Params overrides kept across restarts
        """
        self.param_path = Path(param_path)
        self.overrides = overrides
        self.requested = threading.Event()
        self.restarts = 0
        self._previous_handler = None
        self._signum: Optional[int] = None
    
    def request(self) -> None:
        """Ask for a parameter reload at the next iteration boundary."""
        self.requested.set()
    
    def _handle_signal(self, signum, frame) -> None:
        self.requested.set()
    
    def install(self, signal_name: Optional[str] = None) -> bool:
        """
        Register the signal handler (main thread only).
        
        Args:
            signal_name: Signal name (settings.hot_restart_signal by default)
            
        Returns:
            bool: False when the signal does not exist on this platform
        """
        name = signal_name or settings.hot_restart_signal
        signum = getattr(signal, name, None)
        if signum is None:
            logger.warning("Signal %s is not available, hot restart disabled", name)
            return False
        self._previous_handler = signal.signal(signum, self._handle_signal)
        self._signum = signum
        logger.debug("Hot restart armed on %s", name)
        return True
    
    def uninstall(self) -> None:
        """Restore the previous signal handler."""
        if self._signum is not None:
            signal.signal(self._signum, self._previous_handler or signal.SIG_DFL)
            self._signum = None
    
    def reload(self, mads: Mads) -> Optional[Params]:
        """
        Re-read the parameter file and apply its mutable parameters.
        
        Args:
            mads: Run in progress
            
        Returns:
            Optional[Params]: New parameters, None when nothing changed
            
        Raises:
            ImmutableParamChanged: If DIMENSION, BB_OUTPUT_TYPE or X0 changed
            MadsError: If the file cannot be read or parsed
        """
        pf = read_param_file(self.param_path)
        changed = immutable_changes(pf, mads.problem)
        if changed:
            raise ImmutableParamChanged(f"Cannot change {', '.join(changed)} during a run")
        params = build_params(pf, mads.problem, **self.overrides)
        if params == mads.params:
            logger.info("Hot restart: parameters unchanged")
            return None
        mads.apply_params(params)
        self.restarts += 1
        return params
    
    def __call__(self, mads: Mads) -> None:
        if not self.requested.is_set():
            return
        self.requested.clear()
        logger.info("Hot restart requested at iteration %d", mads.state.k)
        try:
            self.reload(mads)
        except ImmutableParamChanged as exc:
            logger.warning("Hot restart rejected, continuing with the old parameters: %s", exc)
        except MadsError as exc:
            logger.warning("Hot restart failed, continuing with the old parameters: %s", exc)
