"""Convolution square-roots ``q`` of stationary covariances, sampled on a torus.

A field is built as ``f = q * W`` with ``W`` white noise, so the covariance is
the autocorrelation ``kappa(x) = int q(y) q(y + x) dy`` (equal to ``q * q`` for
the even kernels used throughout). All integrals are rectangle-rule sums with
cell volume ``(side / n) ** d``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .grid import TorusGrid

FAMILIES = ("bargmann_fock", "oscillatory", "truncated_polynomial_decay", "constant", "custom_table")

# minimum number of cells across the characteristic width
MIN_CELLS_PER_WIDTH = 8


class KernelError(ValueError):
    pass


class KernelUnderresolved(KernelError):
    pass


class ZeroKernelError(KernelError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Analytic description of ``q``.

    ``params`` keys by family:

    * ``bargmann_fock``: ``scale`` (covariance ``exp(-|x|^2 / (2 scale^2))``), optional ``r_cut``
    * ``oscillatory``: ``scale``, ``a`` for ``(1 - a |x/scale|^2) exp(-|x/scale|^2)``, optional ``r_cut``
    * ``truncated_polynomial_decay``: ``scale``, ``beta``, ``r_cut`` for ``(1 + |x/scale|^2)^(-beta/2)``
    * ``constant``: ``value``
    * ``custom_table``: ``table`` (array on the grid, or callable of the
      minimal-image coordinates), optional ``width``
    """

    family: str
    params: Mapping = field(default_factory=dict)
    normalize_sigma: bool = False
    claims_decay: bool = True
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        for key, val in self.params.items():
            if key == "table":
                continue
            if not np.isfinite(float(val)):
                raise KernelError(f"kernel parameter {key}={val} is not finite")
        if "r_cut" in self.params and float(self.params["r_cut"]) <= 0:
            raise KernelError("r_cut must be positive")
        if self.family == "truncated_polynomial_decay":
            if "r_cut" not in self.params:
                raise KernelError("truncated_polynomial_decay needs r_cut")
            if self.claims_decay and float(self.params.get("beta", 3.0)) <= 2:
                raise KernelError("decay exponent beta must exceed 2 for a decaying kernel")
        if self.family == "custom_table" and "table" not in self.params:
            raise KernelError("custom_table needs a table")

    @property
    def label(self) -> str:
        return self.name or self.family

    def describe(self) -> dict:
        out = {"family": self.family, "normalize_sigma": self.normalize_sigma}
        for key, val in sorted(self.params.items()):
            if key == "table":
                out[key] = getattr(val, "__name__", "array")
            else:
                out[key] = float(val)
        if self.name:
            out["name"] = self.name
        return out

    def width(self) -> float | None:
        """Characteristic width: twice the e-folding radius of ``q``."""
        if self.family == "constant":
            return None
        if self.family == "custom_table":
            w = self.params.get("width")
            return None if w is None else float(w)
        return 2.0 * float(self.params.get("scale", 1.0))


def _cutoff_1d(u: np.ndarray) -> np.ndarray:
    # smooth step: 1 on [0, 1/2], 0 on [1, inf)
    z = np.clip(2.0 * (1.0 - np.abs(u)), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)
        b = np.where(z < 1, np.exp(-1.0 / np.where(z < 1, 1.0 - z, 1.0)), 0.0)
    return a / (a + b)


def smooth_cutoff(coords: list[np.ndarray], r_cut: float) -> np.ndarray:
    """``chi(x / r_cut)``: equal to one on ``[-r_cut/2, r_cut/2]^d``, zero outside ``[-r_cut, r_cut]^d``."""
    out = np.ones_like(coords[0])
    for x in coords:
        out = out * _cutoff_1d(x / r_cut)
    return out


def _profile(spec: KernelSpec, d: int) -> Callable[[list[np.ndarray]], np.ndarray]:
    p = spec.params
    s = float(p.get("scale", 1.0))
    if spec.family == "bargmann_fock":
        norm = (2.0 / (math.pi * s * s)) ** (d / 4.0)
        base = lambda xs: norm * np.exp(-sum(x * x for x in xs) / (s * s))
    elif spec.family == "oscillatory":
        a = float(p["a"])
        def base(xs):
            r2 = sum(x * x for x in xs) / (s * s)
            return (1.0 - a * r2) * np.exp(-r2)
    elif spec.family == "truncated_polynomial_decay":
        beta = float(p["beta"])
        base = lambda xs: (1.0 + sum(x * x for x in xs) / (s * s)) ** (-beta / 2.0)
    elif spec.family == "custom_table":
        fn = p["table"]
        base = lambda xs: np.asarray(fn(*xs), dtype=float)
    else:
        raise KernelError(f"no analytic profile for {spec.family}")
    if "r_cut" in p:
        r_cut = float(p["r_cut"])
        return lambda xs: base(xs) * smooth_cutoff(xs, r_cut)
    return base


def _reach(spec: KernelSpec, d: int) -> float:
    p = spec.params
    if "r_cut" in p:
        return float(p["r_cut"]) * math.sqrt(d)
    if spec.family in ("bargmann_fock", "oscillatory"):
        # exp(-144) is far below double precision relative to the peak
        return 12.0 * float(p.get("scale", 1.0))
    return math.inf


def sample_profile(spec: KernelSpec, grid: TorusGrid) -> np.ndarray:
    """Periodized kernel: sum of ``q(x + side * v)`` over the images ``v`` that can matter."""
    if spec.family == "constant":
        return np.full(grid.shape, float(spec.params.get("value", 1.0)))
    table = spec.params.get("table")
    if spec.family == "custom_table" and not callable(table):
        arr = np.asarray(table, dtype=float)
        if arr.shape != grid.shape:
            raise KernelError(f"table shape {arr.shape} does not match grid {grid.shape}")
        return arr.copy()
    prof = _profile(spec, grid.d)
    disp = grid.displacements()
    reach = _reach(spec, grid.d)
    if not np.isfinite(reach):
        m = 2
    else:
        m = max(0, math.ceil(reach / grid.side - 0.5))
    out = np.zeros(grid.shape)
    shifts = range(-m, m + 1)
    for v in np.array(np.meshgrid(*[shifts] * grid.d, indexing="ij")).reshape(grid.d, -1).T:
        out += prof([x + grid.side * k for x, k in zip(disp, v)])
    return out


def autocorrelation(values: np.ndarray, cell_volume: float) -> np.ndarray:
    """Circular autocorrelation ``sum_u q[u] q[u + x] * cell_volume`` via FFT."""
    qh = np.fft.rfftn(values)
    return np.fft.irfftn(qh * np.conj(qh), s=values.shape, axes=range(values.ndim)) * cell_volume


def autocorrelation_direct(values: np.ndarray, cell_volume: float) -> np.ndarray:
    """Double-sum reference for :func:`autocorrelation`; quadratic in the cell count."""
    n = values.shape
    flat = values.ravel()
    idx = np.array(np.unravel_index(np.arange(flat.size), n)).T
    out = np.zeros(flat.size)
    for k, x in enumerate(idx):
        shifted = [(idx[:, a] + x[a]) % n[a] for a in range(len(n))]
        out[k] = np.dot(flat, values[tuple(shifted)])
    return out.reshape(n) * cell_volume


@dataclass(frozen=True, eq=False)
class Kernel:
    spec: KernelSpec
    grid: TorusGrid
    values: np.ndarray
    kappa: np.ndarray
    sigma: float
    l1_norm: float
    l2_norm: float
    alpha: float

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(sorted(self.spec.describe().items())).encode())
        h.update(repr(self.grid.to_dict()).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()[:16]

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of the circulant covariance (DFT of ``kappa``), real."""
        return np.fft.fftn(self.kappa).real

    def shifted(self, cells) -> "Kernel":
        """Same kernel with its center translated by whole cells."""
        values = np.roll(self.values, shift=tuple(cells), axis=tuple(range(self.grid.d)))
        return _assemble(self.spec, self.grid, values)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def alpha_value(l1: float, l2: float, volume: float) -> float:
    if not l1 > 0:
        raise ZeroKernelError("alpha needs a kernel with nonzero L1 norm")
    return (1.0 + abs(math.log(l2 / l1 * math.sqrt(volume)))) ** -0.5


def _assemble(spec: KernelSpec, grid: TorusGrid, values: np.ndarray) -> Kernel:
    vol = grid.cell_volume
    if not np.any(values != 0):
        raise ZeroKernelError("kernel vanishes identically on the grid")
    kappa = autocorrelation(values, vol)
    sigma = math.sqrt(float(np.sum(values * values)) * vol)
    if spec.normalize_sigma:
        values = values / sigma
        kappa = kappa / sigma ** 2
        sigma = math.sqrt(float(np.sum(values * values)) * vol)
    l1 = float(np.sum(np.abs(values))) * vol
    l2 = math.sqrt(float(np.sum(values * values)) * vol)
    return Kernel(spec, grid, _freeze(values), _freeze(kappa), sigma, l1, l2,
                  alpha_value(l1, l2, grid.volume))


def make_kernel(spec: KernelSpec, grid: TorusGrid) -> Kernel:
    width = spec.width()
    if width is not None and width / grid.spacing < MIN_CELLS_PER_WIDTH:
        raise KernelUnderresolved(
            f"kernel width {width} spans {width / grid.spacing:.2f} cells; "
            f"need at least {MIN_CELLS_PER_WIDTH}")
    return _assemble(spec, grid, sample_profile(spec, grid))


def alpha(k: Kernel) -> float:
    """``[1 + |ln(||q||_2 / ||q||_1 * sqrt(|T|))|]^(-1/2)`` from grid-quadrature norms."""
    return alpha_value(k.l1_norm, k.l2_norm, k.grid.volume)


# ---------------------------------------------------------------- conditions


@dataclass(frozen=True)
class ConditionTolerances:
    weak_positivity_rel: float = 1e-12
    symmetry_rel: float = 1e-12
    decay_beta_min: float = 2.0
    eigenvalue_rel: float = 1e-8


@dataclass(frozen=True)
class ConditionCheck:
    passed: bool
    statistic: str
    value: float


@dataclass(frozen=True)
class ConditionReport:
    weak_positivity: ConditionCheck
    strong_positivity: ConditionCheck
    symmetry: ConditionCheck
    decay: ConditionCheck
    nondegeneracy: ConditionCheck
    tolerances: ConditionTolerances

    REQUIRED = ("weak_positivity", "symmetry", "decay", "nondegeneracy")
    NAMES = ("weak_positivity", "strong_positivity", "symmetry", "decay", "nondegeneracy")

    def failed_required(self) -> list[str]:
        return [name for name in self.REQUIRED if not getattr(self, name).passed]

    def to_flat(self) -> dict:
        out = {}
        for name in self.NAMES:
            chk = getattr(self, name)
            out[f"{name}.pass"] = bool(chk.passed)
            out[f"{name}.{chk.statistic}"] = float(chk.value)
        for key, val in vars(self.tolerances).items():
            out[f"tolerance.{key}"] = val
        return out


def _symmetry_residual(values: np.ndarray) -> float:
    # quarter turns in every coordinate plane and reflection of each axis
    worst = 0.0
    d = values.ndim
    for a in range(d):
        flipped = np.roll(np.flip(values, axis=a), 1, axis=a)
        worst = max(worst, float(np.max(np.abs(flipped - values))))
        for b in range(a + 1, d):
            rot = np.roll(np.flip(np.swapaxes(values, a, b), axis=a), 1, axis=a)
            worst = max(worst, float(np.max(np.abs(rot - values))))
    return worst


def _decay_exponent(k: Kernel) -> float:
    """Power-law exponent of ``|q|`` fitted on ``r`` in ``[side/4, side/2]``.

    Analytic families are probed along a ray of the unperiodized profile, since
    summing images flattens the tail on the torus; tables use the grid values.
    A profile that vanishes on the whole band decays faster than any power.
    """
    side = k.grid.side
    if k.spec.family in ("constant", "custom_table"):
        r = k.grid.radius().ravel()
        q = np.abs(k.values).ravel()
    else:
        r = np.linspace(side / 4, side / 2, 64)
        xs = [r] + [np.zeros_like(r)] * (k.grid.d - 1)
        q = np.abs(_profile(k.spec, k.grid.d)(xs))
    band = (r >= side / 4) & (r <= side / 2) & (q > 0)
    if np.count_nonzero(band) < 2 or np.ptp(r[band]) == 0:
        return math.inf
    slope = np.polyfit(np.log(r[band]), np.log(q[band]), 1)[0]
    return float(-slope)


def _gradient_covariance(k: Kernel) -> np.ndarray:
    """Covariance of ``(f, grad f)`` from central differences of ``kappa`` at the origin."""
    d, h, kap = k.grid.d, k.grid.spacing, k.kappa

    def at(offset):
        return kap[tuple(int(o) % k.grid.n for o in offset)]

    e = np.eye(d, dtype=int)
    cov = np.zeros((d + 1, d + 1))
    cov[0, 0] = at(np.zeros(d))
    for i in range(d):
        g = (at(e[i]) - at(-e[i])) / (2 * h)
        cov[0, i + 1] = cov[i + 1, 0] = g
        for j in range(d):
            if i == j:
                hess = (at(e[i]) - 2 * at(np.zeros(d)) + at(-e[i])) / h ** 2
            else:
                hess = (at(e[i] + e[j]) - at(e[i] - e[j]) - at(e[j] - e[i]) + at(-e[i] - e[j])) / (4 * h * h)
            cov[i + 1, j + 1] = -hess
    return cov


def validate_conditions(k: Kernel, tolerances: ConditionTolerances | None = None) -> ConditionReport:
    tol = tolerances or ConditionTolerances()
    s2 = k.sigma ** 2
    min_q = float(np.min(k.values))
    strong = ConditionCheck(min_q >= 0.0, "min_q", min_q)
    min_kappa = float(np.min(k.kappa))
    # q >= 0 forces q * q >= 0; negative FFT dust must not contradict that
    weak = ConditionCheck(bool(strong.passed or min_kappa >= -tol.weak_positivity_rel * s2), "min_kappa", min_kappa)
    asym = _symmetry_residual(k.values)
    scale = float(np.max(np.abs(k.values)))
    sym = ConditionCheck(asym <= tol.symmetry_rel * scale, "max_asymmetry", asym)
    beta = _decay_exponent(k)
    decay = ConditionCheck(beta > tol.decay_beta_min, "fitted_beta", beta)
    if k.grid.n >= 3:
        min_eig = float(np.min(np.linalg.eigvalsh(_gradient_covariance(k))))
        nondeg = ConditionCheck(min_eig >= tol.eigenvalue_rel * s2, "min_eigenvalue", min_eig)
    else:
        nondeg = ConditionCheck(False, "min_eigenvalue", math.nan)
    return ConditionReport(weak, strong, sym, decay, nondeg, tol)


# ------------------------------------------------------------------- presets


def odd_gaussian(x, y, *rest):
    """``x1 exp(-|x|^2)``: odd in the first coordinate, used to exercise the symmetry check."""
    r2 = x * x + y * y + sum(z * z for z in rest)
    return x * np.exp(-r2)


PRESETS: dict[str, KernelSpec] = {
    "bargmann_fock": KernelSpec("bargmann_fock", {"scale": 1.0}, normalize_sigma=True, name="bargmann_fock"),
    "oscillatory": KernelSpec("oscillatory", {"scale": 1.0, "a": 0.05}, normalize_sigma=True, name="oscillatory"),
    "polynomial": KernelSpec("truncated_polynomial_decay", {"scale": 1.0, "beta": 3.0, "r_cut": 4.0},
                             normalize_sigma=True, name="polynomial"),
    "constant": KernelSpec("constant", {"value": 1.0}, name="constant"),
    "odd_gaussian": KernelSpec("custom_table", {"table": odd_gaussian, "width": 2.0}, name="odd_gaussian"),
}


def preset(name: str, **overrides) -> KernelSpec:
    try:
        base = PRESETS[name]
    except KeyError:
        raise KernelError(f"unknown kernel preset {name!r}; known: {sorted(PRESETS)}") from None
    params = dict(base.params)
    normalize = overrides.pop("normalize_sigma", base.normalize_sigma)
    params.update(overrides)
    return KernelSpec(base.family, params, normalize, base.claims_decay, base.name)
