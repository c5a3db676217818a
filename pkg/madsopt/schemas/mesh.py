"""
Pydantic schema for the mesh/frame state.
"""

from pydantic import BaseModel, Field, model_validator

from madsopt.schemas.evaluation import Point


class MeshState(BaseModel):
    """Isotropic mesh centered at the current frame center."""
    
    center: Point
    delta: float = Field(..., gt=0, description="Mesh size")
    Delta: float = Field(..., gt=0, description="Frame size")
    tau: float = Field(default=0.5, gt=0, lt=1)
    
    model_config = {
        "frozen": True
    }
    
    @model_validator(mode='after')
    def validate_mesh_law(self):
        """Mesh size must equal min(Delta, Delta^2)."""
        if self.delta != min(self.Delta, self.Delta * self.Delta):
            raise ValueError(
                f"Mesh size {self.delta} does not match frame size {self.Delta}"
            )
        return self
    
    @property
    def n(self) -> int:
        """Dimension of the mesh."""
        return len(self.center)
