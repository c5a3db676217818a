"""
Poll direction generation (orthogonal 2n directions).

A unit vector v drawn from the run's generator defines the Householder matrix
H = I - 2 v v^T. Its columns are orthogonal; each one is scaled so that its
largest entry spans the frame, rounded to integers, and emitted with its
opposite. Poll points center + delta * d then lie on the mesh and inside the
frame.
"""

from typing import List, Optional, Sequence

import numpy as np

from madsopt.algos.mesh import frame_steps
from madsopt.schemas.mesh import MeshState
from madsopt.utils.numeric import round_half_away


def householder_matrix(v: Sequence[float]) -> np.ndarray:
    """
    Householder matrix of a direction.
    
    Args:
        v: Direction (normalized internally)
        
    Returns:
        np.ndarray: I - 2 v v^T for the unit vector along v
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    return np.eye(v.size) - 2.0 * np.outer(v, v)


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed direction on the unit sphere."""
    while True:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm > 0:
            return v / norm


def integer_directions(H: np.ndarray, steps: int) -> np.ndarray:
    """
    Scale and round the columns of an orthogonal matrix.
    
    Args:
        H: Orthogonal n x n matrix
        steps: Integer length of the largest entry of each column
        
    Returns:
        np.ndarray: n x n integer matrix whose columns are the base directions.
        Falls back to scaled coordinate directions when rounding made the
        columns linearly dependent.
    """
    n = H.shape[0]
    scaled = H * (steps / np.max(np.abs(H), axis=0))
    directions = round_half_away(scaled)
    if np.linalg.matrix_rank(directions) < n:
        directions = steps * np.eye(n)
    return directions


def ortho_2n_directions(
    n: int,
    rng: np.random.Generator,
    mesh: MeshState,
    v: Optional[Sequence[float]] = None,
) -> List[np.ndarray]:
    """
    Orthogonal positive spanning set of 2n integer directions.
    
    Args:
        n: Dimension
        rng: Seeded generator (one unit vector is drawn per call unless v is given)
        mesh: Mesh whose frame radius bounds the directions
        v: Optional Householder seed direction
        
    Returns:
        List[np.ndarray]: d_1..d_n followed by -d_1..-d_n
    """
    if v is None:
        v = random_unit_vector(n, rng)
    H = householder_matrix(v)
    base = integer_directions(H, frame_steps(mesh))
    columns = [base[:, i] for i in range(n)]
    return columns + [-d for d in columns]
