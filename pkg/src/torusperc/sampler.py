"""Field synthesis ``f = q * W`` from discrete white noise, plus an exact spectral sampler."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .grid import TorusGrid
from .kernel import Kernel, KernelSpec, make_kernel

ROUTES = ("white_noise", "spectral_oracle")

# relative tolerance for negative Fourier mass of kappa
SPECTRAL_TOL = 1e-9


class GridMismatch(ValueError):
    pass


class SpectralError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WhiteNoiseEps:
    """iid ``N(0, cell_volume)`` coefficients, one per lattice point."""
    grid: TorusGrid
    coeffs: np.ndarray
    seed: int


@dataclass(frozen=True, eq=False)
class FieldSample:
    grid: TorusGrid
    values: np.ndarray
    kernel_id: str
    seed: int
    level_offset: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def at_level(self, level: float) -> "FieldSample":
        """The same realization shifted to ``f + level``."""
        return replace(self, level_offset=float(level))

    @property
    def shifted_values(self) -> np.ndarray:
        if self.level_offset == 0.0:
            return self.values
        return self.values + self.level_offset


def field_from_array(values, side: float = None, kernel_id: str = "array", seed: int = 0) -> FieldSample:
    """Wrap an explicit array (test fields, imported data) as a sample on a square torus."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    grid = TorusGrid(n, float(side if side is not None else n), values.ndim)
    return FieldSample(grid, values, kernel_id, seed)


def draw_white_noise(grid: TorusGrid, seed: int) -> WhiteNoiseEps:
    coeffs = rng.normals(seed, grid.shape, rng.NOISE) * math.sqrt(grid.cell_volume)
    return WhiteNoiseEps(grid, coeffs, int(seed))


def _circular_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(np.fft.rfftn(a) * np.fft.rfftn(b), s=a.shape, axes=range(a.ndim))


def direct_convolution(values: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``sum_z coeffs[z] values[x - z]`` by explicit summation; meant for small grids."""
    shape = values.shape
    out = np.zeros(shape)
    for z in zip(*np.nonzero(np.ones(shape, dtype=bool))):
        out += coeffs[z] * np.roll(values, z, axis=tuple(range(len(shape))))
    return out


def convolve_field(k: Kernel, w: WhiteNoiseEps) -> FieldSample:
    if k.grid != w.grid:
        raise GridMismatch(f"kernel grid {k.grid} differs from noise grid {w.grid}")
    return FieldSample(k.grid, _circular_convolve(k.values, w.coeffs), k.digest, w.seed)


def spectral_multiplier(k: Kernel) -> np.ndarray:
    """Square root of the covariance spectrum, with round-off dust clamped to zero."""
    spec = k.spectrum()
    floor = -SPECTRAL_TOL * k.sigma ** 2
    if spec.min() < floor:
        raise SpectralError(f"kappa has negative Fourier mass {spec.min():.3e} below {floor:.3e}")
    return np.sqrt(np.clip(spec, 0.0, None))


def draw_field(k: Kernel, seed: int, route: str = "white_noise") -> FieldSample:
    if route == "white_noise":
        return convolve_field(k, draw_white_noise(k.grid, seed))
    if route == "spectral_oracle":
        xi = rng.normals(seed, k.grid.shape, rng.NOISE, extra=1)
        # real noise has a Hermitian transform, so the product inverts to a real field
        values = np.fft.ifftn(spectral_multiplier(k) * np.fft.fftn(xi)).real
        return FieldSample(k.grid, values, k.digest, int(seed))
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


def sample_field(k: Kernel, master_seed: int, index: int, route: str = "white_noise") -> FieldSample:
    """Sample number ``index`` of a Monte Carlo run."""
    return draw_field(k, rng.sample_seed(master_seed, index), route)


# ------------------------------------------------------------------ covariance


@dataclass(frozen=True)
class CovarianceEstimate:
    offsets: list
    empirical: np.ndarray
    theoretical: np.ndarray
    standard_errors: np.ndarray
    n_samples: int
    max_abs_deviation: float

    @property
    def deviation_se(self) -> np.ndarray:
        return np.abs(self.empirical - self.theoretical) / self.standard_errors

    @property
    def max_deviation_se(self) -> float:
        return float(np.max(self.deviation_se))


def estimate_covariance(k: Kernel, n_samples: int, seed: int, offsets, anchor=None,
                        route: str = "white_noise") -> CovarianceEstimate:
    """Empirical ``Cov(f(a), f(a + x))`` over independent samples at a fixed anchor ``a``."""
    if n_samples < 100:
        raise ValueError("estimate_covariance needs at least 100 samples")
    n = k.grid.n
    offsets = [tuple(int(c) for c in x) for x in offsets]
    anchor = tuple(anchor) if anchor is not None else (0,) * k.grid.d
    targets = [tuple((a + c) % n for a, c in zip(anchor, x)) for x in offsets]
    prods = np.empty((n_samples, len(offsets)))
    for s in range(n_samples):
        v = sample_field(k, seed, s, route).values
        base = v[anchor]
        prods[s] = [base * v[t] for t in targets]
    # the mean is known to be zero, so the second moment is the covariance
    emp = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(n_samples)
    theo = np.array([k.kappa[tuple(c % n for c in x)] for x in offsets])
    return CovarianceEstimate(offsets, emp, theo, se, n_samples, float(np.max(np.abs(emp - theo))))


# ------------------------------------------------------------------ refinement


def refine_noise(w: WhiteNoiseEps, factor: int = 2) -> WhiteNoiseEps:
    """Split every coefficient into ``factor**d`` children that sum back to it exactly.

    Children are ``W / m + (Z - mean(Z)) * sqrt(v)`` with ``m`` children of cell
    volume ``v`` and ``Z`` fresh standard normals; they are iid ``N(0, v)``.
    """
    grid = w.grid.refined(factor)
    d, m = grid.d, factor ** grid.d
    z = rng.normals(w.seed, grid.shape, rng.REFINE, extra=grid.n)
    # group children by parent: axes (parent_0, child_0, parent_1, child_1, ...)
    blocks = z.reshape(sum(((w.grid.n, factor) for _ in range(d)), ()))
    child_axes = tuple(range(1, 2 * d, 2))
    centered = blocks - blocks.mean(axis=child_axes, keepdims=True)
    parent = np.expand_dims(w.coeffs, child_axes)
    children = parent / m + centered * math.sqrt(grid.cell_volume)
    return WhiteNoiseEps(grid, children.reshape(grid.shape), w.seed)


def coarsen_noise(w: WhiteNoiseEps, factor: int = 2) -> np.ndarray:
    """Sum children back into parent coefficients (inverse of :func:`refine_noise`)."""
    n, d = w.grid.n // factor, w.grid.d
    blocks = w.coeffs.reshape(sum(((n, factor) for _ in range(d)), ()))
    return blocks.sum(axis=tuple(range(1, 2 * d, 2)))


@dataclass(frozen=True)
class ApproximationRow:
    n: int
    n_fine: int
    mean_sup_error: float
    sup_error_se: float
    mean_square_error: float
    square_error_se: float


def approximation_error_scan(k_spec: KernelSpec, n_list, n_samples: int, seed: int,
                             side: float = 8.0) -> list[ApproximationRow]:
    """Coupled errors ``f_eps - f_{eps/2}`` on the coarse lattice, one row per refinement."""
    n_list = [int(n) for n in n_list]
    for a, b in zip(n_list, n_list[1:]):
        if b <= a or b % a:
            raise ValueError(f"n_list must be increasing and nested, got {n_list}")
    kernels = [make_kernel(k_spec, TorusGrid(n, side)) for n in n_list]
    sup = np.zeros((n_samples, len(n_list) - 1))
    msq = np.zeros_like(sup)
    for s in range(n_samples):
        w = draw_white_noise(kernels[0].grid, rng.sample_seed(seed, s))
        f_prev = convolve_field(kernels[0], w).values
        for lvl in range(1, len(n_list)):
            factor = n_list[lvl] // n_list[lvl - 1]
            w = refine_noise(w, factor)
            f = convolve_field(kernels[lvl], w).values
            # compare on the coarse lattice, which the fine one contains
            coarse = f[(slice(None, None, factor),) * f.ndim]
            err = coarse - f_prev
            sup[s, lvl - 1] = np.max(np.abs(err))
            msq[s, lvl - 1] = np.mean(err * err)
            f_prev = f
    root = math.sqrt(n_samples)
    se = lambda a: a.std(axis=0, ddof=1) / root if n_samples > 1 else np.zeros(a.shape[1])
    sup_se, msq_se = se(sup), se(msq)
    return [ApproximationRow(n_list[i], n_list[i + 1], float(sup[:, i].mean()), float(sup_se[i]),
                             float(msq[:, i].mean()), float(msq_se[i]))
            for i in range(len(n_list) - 1)]


def sup_norm_diagnostic(k: Kernel, n_samples: int, seed: int, route: str = "white_noise") -> dict:
    """Empirical ``E sup|f|`` against the bound shape ``sigma * (1 + |ln|T||)^(1/2)``."""
    sups = np.array([np.max(np.abs(sample_field(k, seed, s, route).values)) for s in range(n_samples)])
    bound = k.sigma * math.sqrt(1.0 + abs(math.log(k.grid.volume)))
    mean = float(sups.mean())
    se = float(sups.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return {"mean_sup": mean, "se": se, "bound": bound, "ratio": mean / bound}
