"""Manufactured solution models."""

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from tdgl_mixed_fem.domain.mesh.mesh_models import DomainKind

SpaceTimeField = Callable[[np.ndarray, float], np.ndarray]


class CaseName(str, Enum):
    """Built-in manufactured cases."""

    SQUARE2D = "square2d"
    LSHAPE2D = "lshape2d"
    CUBE3D = "cube3d"
    ZERO2D = "zero2d"
    ZERO3D = "zero3d"


class FieldName(str, Enum):
    """Fields every manufactured case provides."""

    PSI = "psi"
    GRAD_PSI = "grad_psi"
    A = "A"
    DIV_A = "div_A"
    SIGMA = "sigma"
    H_E = "H_e"
    CURL_H_E = "curl_H_e"
    F = "f"
    G = "g"


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution, boundary data and forcing of a TDGL test problem.

    Every field maps points of shape (..., d) and a time to values of shape
    (...,) for scalars or (..., d) for vectors (sigma and H_e are scalars in 2D).

    Attributes:
        name: Case identifier.
        dimension: Spatial dimension.
        domain: Domain the case is posed on.
        kappa: Ginzburg-Landau parameter.
        eta: Time relaxation constant the forcing was derived with.
        final_time: Default final time T.
        fields: Compiled space-time fields.
    """

    name: CaseName
    dimension: int
    domain: DomainKind
    kappa: float
    eta: float
    final_time: float
    fields: Mapping[FieldName, SpaceTimeField] = field(repr=False)

    def evaluate(self, name: FieldName, points: np.ndarray, time: float) -> np.ndarray:
        """Evaluate a field at points and a time.

        Args:
            name: Field to evaluate.
            points: Cartesian points, shape (..., d).
            time: Time.

        Returns:
            Field values.

        Raises:
            ValueError: If the field is not finite at some point (the L-shape
                potential is singular at the reentrant corner).
        """
        points = np.asarray(points, dtype=np.float64)
        with np.errstate(all="ignore"):
            values = self.fields[name](points, time)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"Field {name.value} of case {self.name.value} is not evaluable there")
        return values

    def at(self, name: FieldName, time: float) -> Callable[[np.ndarray], np.ndarray]:
        """Freeze a field at a time, giving a spatial callback."""

        def callback(points: np.ndarray) -> np.ndarray:
            return self.evaluate(name, points, time)

        return callback
