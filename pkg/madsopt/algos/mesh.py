"""
Mesh and frame size management.

The mesh at iteration k is {center + delta * y : y in Z^n} with
delta = min(Delta, Delta^2). With tau = 1/2 every update is an exact power of
two scaling, so the mesh law holds bit for bit.
"""

from typing import Optional, Sequence

import numpy as np

from madsopt.errors import NonPositiveFrame
from madsopt.schemas.evaluation import Point
from madsopt.schemas.mesh import MeshState
from madsopt.utils.numeric import round_half_away

# Relative slack, in units of double precision epsilon, when testing mesh membership
_ON_MESH_ULPS = 8.0


def update_mesh_size(Delta: float) -> float:
    """
    Mesh size associated with a frame size.
    
    Args:
        Delta: Frame size
        
    Returns:
        float: min(Delta, Delta^2)
        
    Raises:
        NonPositiveFrame: If Delta <= 0
    """
    if not Delta > 0:
        raise NonPositiveFrame(f"Frame size must be positive, got {Delta}")
    return min(Delta, Delta * Delta)


def initial_mesh(center: Sequence[float], delta0: float, tau: float = 0.5) -> MeshState:
    """Mesh with frame size delta0 centered at a starting point."""
    return MeshState(center=tuple(center), Delta=delta0, delta=update_mesh_size(delta0), tau=tau)


def with_frame(mesh: MeshState, Delta: float) -> MeshState:
    """Same center and tau, new frame size."""
    return MeshState(center=mesh.center, Delta=Delta, delta=update_mesh_size(Delta), tau=mesh.tau)


def recenter(mesh: MeshState, center: Sequence[float]) -> MeshState:
    """Same sizes, new center."""
    return mesh.model_copy(update={"center": tuple(center)})


def enlarge(mesh: MeshState, max_Delta: Optional[float] = None) -> MeshState:
    """
    Enlarge the frame after a success: Delta <- Delta / tau.
    
    Args:
        mesh: Current mesh
        max_Delta: Optional cap on the new frame size
        
    Returns:
        MeshState: Enlarged mesh
    """
    Delta = mesh.Delta / mesh.tau
    if max_Delta is not None:
        Delta = min(Delta, max_Delta)
    return with_frame(mesh, Delta)


def refine(mesh: MeshState) -> MeshState:
    """Refine the frame after a failure: Delta <- tau * Delta."""
    return with_frame(mesh, mesh.tau * mesh.Delta)


def project_to_mesh(x: Sequence[float], mesh: MeshState) -> Point:
    """
    Nearest mesh point, ties rounded away from zero.
    
    Args:
        x: Point to project (finite coordinates)
        mesh: Target mesh
        
    Returns:
        Point: center + delta * round((x - center) / delta)
    """
    center = np.asarray(mesh.center, dtype=float)
    steps = round_half_away((np.asarray(x, dtype=float) - center) / mesh.delta)
    return tuple(float(v) for v in center + mesh.delta * steps)


def is_on_mesh(x: Sequence[float], mesh: MeshState) -> bool:
    """
    Check whether a point lies on the mesh.
    
    A point is on the mesh when it equals its lattice projection up to the
    rounding of the floating point sum center + delta * y.
    
    Args:
        x: Point to test
        mesh: Mesh
        
    Returns:
        bool: True when (x - center) / delta is an integer vector
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(mesh.center, dtype=float)
    steps = round_half_away((x - center) / mesh.delta)
    lattice = center + mesh.delta * steps
    scale = np.maximum.reduce([np.abs(x), np.abs(center), np.abs(mesh.delta * steps)])
    slack = _ON_MESH_ULPS * np.finfo(float).eps * scale
    return bool(np.all(np.abs(x - lattice) <= slack))


def frame_steps(mesh: MeshState) -> int:
    """
    Number of mesh steps spanning the frame radius.
    
    round(Delta / delta), ties away from zero, and at least 1.
    """
    return max(1, int(round_half_away(mesh.Delta / mesh.delta)))


def clip_to_bounds(
    x: Sequence[float],
    mesh: MeshState,
    lower: Sequence[float],
    upper: Sequence[float],
) -> Optional[Point]:
    """
    Snap a point to the variable bounds and back onto the mesh.
    
    Coordinates beyond a bound are snapped to it, the point is projected on
    the mesh, and any coordinate pushed out again is moved one mesh step
    inward.
    
    Args:
        x: Candidate point
        mesh: Current mesh
        lower: Lower bounds (may be -inf)
        upper: Upper bounds (may be +inf)
        
    Returns:
        Optional[Point]: Mesh point inside the bounds, or None when none exists
    """
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    clipped = np.clip(np.asarray(x, dtype=float), lo, up)
    center = np.asarray(mesh.center, dtype=float)
    steps = round_half_away((clipped - center) / mesh.delta)
    projected = center + mesh.delta * steps
    
    above = projected > up
    below = projected < lo
    if np.any(above) or np.any(below):
        steps = steps - above.astype(float) + below.astype(float)
        projected = center + mesh.delta * steps
        if np.any(projected > up) or np.any(projected < lo):
            return None
    return tuple(float(v) for v in projected)
