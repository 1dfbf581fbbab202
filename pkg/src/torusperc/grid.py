"""Square torus discretization shared by kernels, samplers and the topology code."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TorusGrid:
    """Square torus of physical side ``side`` cut into ``n`` cells per axis.

    Site ``i`` (per axis) is the half-open cell ``[i*h, (i+1)*h)`` and the field
    is sampled at its lower corner ``i*h``, the point of the lattice carrying
    the white-noise coefficient of that cell.
    """

    n: int
    side: float
    d: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not np.isfinite(self.side) or self.side <= 0:
            raise ValueError(f"side must be positive and finite, got {self.side}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "side", float(self.side))

    @property
    def spacing(self) -> float:
        return self.side / self.n

    # the lattice spacing plays the role of the approximation parameter eps
    eps = spacing

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.d

    @property
    def volume(self) -> float:
        return self.side ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    def displacements(self) -> list[np.ndarray]:
        """Minimal-image coordinates of every lattice point, one array per axis."""
        idx = np.arange(self.n)
        idx = np.where(idx < (self.n + 1) // 2, idx, idx - self.n)
        axes = [idx * self.spacing] * self.d
        return np.meshgrid(*axes, indexing="ij")

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.displacements()))

    def refined(self, factor: int) -> "TorusGrid":
        return TorusGrid(self.n * factor, self.side, self.d)

    def to_dict(self) -> dict:
        return {"n": self.n, "side": self.side, "d": self.d}
