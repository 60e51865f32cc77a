"""Linear response of the absorbing dielectric model.

The medium is a polarization oscillator (resonance ``omega0``, static
susceptibility ``chi_s``) coupled to a reservoir continuum with coupling
density ``nu``.  Integrating the reservoir out leaves a frequency-dependent
kernel ``sigma`` that dresses the oscillator; the composite response
``gamma`` and the linear susceptibility ``chi1 = g * gamma / eps0`` follow
in closed form.

Sign conventions: the pole prescription is fixed so that the response is
Hermitian-analytic (``sigma(-w) == conj(sigma(w))``) and passive
(``Im chi1(w) > 0`` for ``w > 0``), which makes the standard single-sided
Kramers-Kronig relations hold.  Concretely

    sigma(w) = (w**2 / rho) * [ PV + i*pi*sign(w)*q(|w|)/(2|w|) ],
    PV = principal value of integral_0^U q(x) / (x**2 - w**2) dx,

with ``q = |nu|**2`` and ``U`` the support end capped at ``loop_cutoff``.
``sigma(0) = 0`` exactly, so ``chi1(0) = chi_s`` in the lossless and lossy
cases alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    GridResolutionError,
    InputError,
    KernelSupportError,
    QuadratureError,
    ResponsePoleError,
)

__all__ = [
    "NuZero",
    "NuConstant",
    "NuTabulated",
    "MediumParams",
    "Rank2Response",
    "reservoir_kernel",
    "gamma_response",
    "chi1",
    "chi1_scalar",
    "chi1_spectrum",
    "kk_reconstruct",
    "nu_from_config",
]

_IDENTITY3 = np.eye(3)


@dataclass(frozen=True)
class NuZero:
    """No reservoir coupling: the medium is lossless."""

    def q(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def support_end(self):
        return 0.0

    def breakpoints(self):
        return np.asarray([])

    def to_config(self):
        return {"type": "zero"}


@dataclass(frozen=True)
class NuConstant:
    """Flat coupling ``nu0`` up to a sharp cutoff ``omega_cut``."""

    nu0: float
    omega_cut: float

    def __post_init__(self):
        if self.omega_cut <= 0:
            raise InputError("omega_cut must be positive")

    def q(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.omega_cut, abs(self.nu0) ** 2, 0.0)

    def support_end(self):
        return float(self.omega_cut)

    def breakpoints(self):
        return np.asarray([self.omega_cut])

    def to_config(self):
        return {"type": "constant", "nu0": self.nu0, "omega_cut": self.omega_cut}


@dataclass(frozen=True, eq=False)
class NuTabulated:
    """Coupling sampled on an ascending frequency grid.

    ``|nu|**2`` is interpolated linearly between samples and is zero
    outside the tabulated range.  Identity semantics (``eq=False``) keep the
    instance hashable for quadrature-node caching.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or grid.size < 2:
            raise InputError("tabulated coupling needs at least two grid points")
        if np.any(np.diff(grid) <= 0) or grid[0] < 0:
            raise InputError("tabulated grid must be ascending and non-negative")
        if values.shape != grid.shape:
            raise InputError("tabulated grid/values shape mismatch")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def q(self, x):
        x = np.asarray(x, dtype=float)
        qtab = np.abs(self.values) ** 2
        return np.interp(x, self.grid, qtab, left=0.0, right=0.0)

    def support_end(self):
        return float(self.grid[-1])

    def breakpoints(self):
        return self.grid

    def to_config(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            out = [[float(v.real), float(v.imag)] for v in vals]
        else:
            out = [float(v) for v in vals]
        return {"type": "tabulated", "grid": [float(g) for g in self.grid], "values": out}


def nu_from_config(cfg) -> NuZero | NuConstant | NuTabulated:
    """Build a coupling spec from its JSON form (see ``to_config``)."""
    if cfg is None:
        return NuZero()
    kind = cfg.get("type", "zero")
    if kind == "zero":
        return NuZero()
    if kind == "constant":
        return NuConstant(nu0=float(cfg["nu0"]), omega_cut=float(cfg["omega_cut"]))
    if kind == "tabulated":
        values = cfg["values"]
        arr = np.asarray(
            [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else float(v) for v in values]
        )
        return NuTabulated(grid=np.asarray(cfg["grid"], dtype=float), values=arr)
    raise InputError(f"unknown coupling type {kind!r}")


@dataclass(frozen=True)
class MediumParams:
    """All constants of the oscillator + reservoir model.

    Normalized units (``eps0 = mu0 = 1``) are the default; SI values can be
    supplied through the config.  The reservoir mass density ``rho`` is
    taken constant in frequency.  ``ieps`` is the nominal pole regulator of
    the kernel prescription; the quadrature takes its limit analytically
    (principal value plus half residue), so the stored value never enters
    numerically.
    """

    omega0: float
    chi_s: float
    alpha: float
    rho: float
    nu: NuZero | NuConstant | NuTabulated = field(default_factory=NuZero)
    g: int = 1
    eps0: float = 1.0
    mu0: float = 1.0
    loop_cutoff: float = 20.0
    ieps: float = 1e-12

    def __post_init__(self):
        if self.omega0 <= 0:
            raise InputError("omega0 must be positive")
        if self.chi_s <= 0:
            raise InputError("chi_s must be positive")
        if self.rho <= 0:
            raise InputError("rho must be positive")
        if self.ieps <= 0:
            raise InputError("ieps must be positive")
        if self.loop_cutoff <= self.omega0:
            raise InputError("loop_cutoff must exceed omega0")
        if self.g not in (0, 1):
            raise InputError("g must be 0 or 1")
        if self.eps0 <= 0 or self.mu0 <= 0:
            raise InputError("vacuum constants must be positive")

    @classmethod
    def from_config(cls, cfg: dict) -> "MediumParams":
        return cls(
            omega0=float(cfg["omega0"]),
            chi_s=float(cfg["chi_s"]),
            alpha=float(cfg.get("alpha", 1.0)),
            rho=float(cfg["rho"]),
            nu=nu_from_config(cfg.get("nu")),
            g=int(cfg.get("g", 1)),
            eps0=float(cfg.get("eps0", 1.0)),
            mu0=float(cfg.get("mu0", 1.0)),
            loop_cutoff=float(cfg.get("loop_cutoff", 20.0 * float(cfg["omega0"]))),
            ieps=float(cfg.get("ieps", 1e-12)),
        )

    def to_config(self) -> dict:
        return {
            "omega0": self.omega0,
            "chi_s": self.chi_s,
            "alpha": self.alpha,
            "rho": self.rho,
            "nu": self.nu.to_config(),
            "g": self.g,
            "eps0": self.eps0,
            "mu0": self.mu0,
            "loop_cutoff": self.loop_cutoff,
            "ieps": self.ieps,
        }


@dataclass(frozen=True)
class Rank2Response:
    """A 3x3 complex response sampled on an ascending frequency grid."""

    freq_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.freq_grid, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise InputError("freq_grid must be strictly increasing")
        if vals.shape != (grid.size, 3, 3):
            raise InputError("values must have shape (n, 3, 3)")
        object.__setattr__(self, "freq_grid", grid)
        object.__setattr__(self, "values", vals)

    def max_anisotropy(self) -> float:
        """Largest deviation from scalar-times-identity, relative to the diagonal."""
        iso = self.values[:, 0, 0][:, None, None] * _IDENTITY3
        dev = np.max(np.abs(self.values - iso), axis=(1, 2))
        scale = np.max(np.abs(np.einsum("nii->ni", self.values)), axis=1)
        return float(np.max(dev / np.where(scale > 0, scale, 1.0)))


def _cluster(center: float, span: float, floor: float) -> np.ndarray:
    """Geometric node cluster on both sides of ``center``."""
    if span <= floor:
        return np.asarray([])
    offs = np.geomspace(floor, span, 24)
    return np.concatenate([center - offs, center + offs])


@lru_cache(maxsize=64)
def _static_nodes(nu, upper: float, n_base: int = 1500):
    """Pole-independent quadrature nodes with the coupling values attached."""
    floor = 1e-9 * upper
    parts = [np.linspace(0.0, upper, n_base)]
    breaks = np.atleast_1d(nu.breakpoints())
    parts.append(breaks[(breaks > 0.0) & (breaks < upper)])
    # the support edge can carry a jump in q; resolve it geometrically
    edge = float(nu.support_end())
    if 0.0 < edge < upper:
        parts.append(_cluster(edge, 0.25 * min(edge, upper - edge), floor))
    nodes = np.unique(np.concatenate(parts))
    nodes = nodes[(nodes >= 0.0) & (nodes <= upper)]
    return nodes, np.asarray(nu.q(nodes), dtype=float)


def _pv_integral(nu, upper: float, w: float) -> float:
    """PV of integral_0^upper q(x) / (x**2 - w**2) dx for 0 < w < upper.

    Subtracts the pole (q(x) -> q(x) - q(w)) and adds the subtracted part
    back through the closed-form primitive of 1/(x**2 - w**2).
    """
    base_x, base_q = _static_nodes(nu, upper)
    extra = _cluster(w, 0.5 * min(w, upper - w), 1e-9 * upper)
    extra = extra[(extra > 0.0) & (extra < upper)]
    x = np.concatenate([base_x, extra])
    q = np.concatenate([base_q, np.asarray(nu.q(extra), dtype=float)])
    order = np.argsort(x, kind="stable")
    x = x[order]
    q = q[order]
    keep = np.abs(x - w) > 1e-13 * max(upper, 1.0)
    x = x[keep]
    q = q[keep]
    qw = float(nu.q(np.asarray([w]))[0])
    with np.errstate(invalid="ignore", over="ignore"):
        integrand = (q - qw) / (x * x - w * w)
        pv = float(np.trapezoid(integrand, x))
    if qw != 0.0:
        # PV int_0^U dx/(x^2-w^2) = ln((U-w)/(U+w)) / (2w)
        pv += qw * math.log((upper - w) / (upper + w)) / (2.0 * w)
    if not math.isfinite(pv):
        raise QuadratureError("kernel quadrature failed")
    return pv


@lru_cache(maxsize=1 << 16)
def _sigma_positive(params: MediumParams, omega: float) -> complex:
    if omega >= params.loop_cutoff:
        raise KernelSupportError("frequency outside kernel support")
    if isinstance(params.nu, NuZero):
        return 0.0 + 0.0j
    pv = _pv_integral(params.nu, params.loop_cutoff, omega)
    q_at = float(params.nu.q(np.asarray([omega]))[0])
    half_residue = math.pi * q_at / (2.0 * omega)
    return (omega * omega / params.rho) * complex(pv, half_residue)


def _sigma_scalar(params: MediumParams, omega: float) -> complex:
    """Scalar reservoir kernel; Hermitian analyticity is exact by folding."""
    if omega < 0.0:
        return np.conj(_sigma_scalar(params, -omega))
    if omega == 0.0:
        return 0.0 + 0.0j
    return _sigma_positive(params, omega)


def reservoir_kernel(params: MediumParams, omega: float) -> np.ndarray:
    """Reservoir kernel sigma(omega) as an isotropic 3x3 complex matrix.

    ``Im sigma(w) >= 0`` for ``w > 0`` (passive prescription) and
    ``sigma(-w) = conj(sigma(w))`` holds to machine precision.
    """
    return _sigma_scalar(params, float(omega)) * np.eye(3, dtype=complex)


def _gamma_scalar(params: MediumParams, omega: float) -> complex:
    if omega < 0.0:
        return np.conj(_gamma_scalar(params, -omega))
    w0sq = params.omega0**2
    sigma = _sigma_scalar(params, omega)
    den = w0sq - omega**2 - omega**2 * w0sq * params.eps0 * params.chi_s * sigma
    if abs(den) < 1e-14:
        raise ResponsePoleError("response pole hit")
    return params.eps0 * w0sq * params.chi_s / den


def gamma_response(params: MediumParams, omega: float) -> np.ndarray:
    """Composite matter+reservoir response Gamma(omega), 3x3 complex."""
    return _gamma_scalar(params, float(omega)) * np.eye(3, dtype=complex)


def chi1(params: MediumParams, omega: float) -> np.ndarray:
    """Linear susceptibility chi1(omega) = g * Gamma(omega) / eps0."""
    if params.g == 0:
        return np.zeros((3, 3), dtype=complex)
    return gamma_response(params, omega) / params.eps0


def chi1_scalar(params: MediumParams, omega: float) -> complex:
    """Scalar value of the (isotropic) linear susceptibility."""
    if params.g == 0:
        return 0.0 + 0.0j
    return _gamma_scalar(params, float(omega)) / params.eps0


def chi1_spectrum(params: MediumParams, freq_grid) -> Rank2Response:
    """Sample chi1 on a frequency grid."""
    grid = np.asarray(freq_grid, dtype=float)
    vals = np.empty((grid.size, 3, 3), dtype=complex)
    for i, w in enumerate(grid):
        vals[i] = chi1(params, w)
    return Rank2Response(freq_grid=grid, values=vals)


def kk_reconstruct(freq_grid, im_part) -> np.ndarray:
    """Reconstruct Re chi from Im chi via the single-sided Kramers-Kronig sum.

        Re chi(w) = (2/pi) PV integral_0^W  x Im chi(x) / (x**2 - w**2) dx

    The grid holds non-negative frequencies; oddness of Im chi in omega is
    assumed (used implicitly by the folded form).  The principal value is a
    trapezoidal sum with the two intervals adjacent to the singular node
    excluded and replaced by the local expansion

        PV int_{w-a}^{w+b} G(x)/(x-w) dx ~ G(w) ln(b/a) + G'(w) (a+b),

    with ``G(x) = x Im chi(x) / (x + w)``.  Endpoint nodes carry no local
    correction and are less accurate; the causality diagnostics only use
    interior points.

    Raises ``GridResolutionError`` when adjacent samples in the significant
    region of Im chi jump by more than 50%.
    """
    grid = np.asarray(freq_grid, dtype=float)
    im = np.asarray(im_part, dtype=float)
    if grid.ndim != 1 or grid.size < 8:
        raise InputError("kk_reconstruct needs an ascending grid of at least 8 points")
    if im.shape != grid.shape:
        raise InputError("freq_grid and im_part shape mismatch")
    if np.any(np.diff(grid) <= 0):
        raise InputError("freq_grid must be strictly increasing")

    peak = float(np.max(np.abs(im)))
    if peak > 0.0:
        lo = np.abs(im[:-1])
        hi = np.abs(im[1:])
        big = np.maximum(lo, hi)
        significant = big > 0.01 * peak
        jump = np.abs(np.diff(im))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(significant, jump / np.where(big > 0, big, 1.0), 0.0)
        if np.any(rel > 0.5):
            raise GridResolutionError("grid under-resolves resonance")

    n = grid.size
    f = grid * im  # numerator x * Im chi(x)
    re = np.empty(n)
    for i in range(n):
        w = grid[i]
        if i == 0 and w == 0.0:
            # Re chi(0) = (2/pi) int Im chi(x)/x dx; Im chi is odd so the
            # integrand is finite at x = 0.
            vals = np.empty(n)
            vals[1:] = im[1:] / grid[1:]
            vals[0] = im[1] / grid[1]
            re[i] = (2.0 / math.pi) * np.trapezoid(vals, grid)
            continue
        lo = max(i - 1, 0)
        hi = min(i + 1, n - 1)
        total = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = f / (grid * grid - w * w)
        if lo > 0:
            total += np.trapezoid(integrand[: lo + 1], grid[: lo + 1])
        if hi < n - 1:
            total += np.trapezoid(integrand[hi:], grid[hi:])
        # local correction over the excluded window
        gvals = f / (grid + w)
        if 0 < i < n - 1:
            a = w - grid[i - 1]
            b = grid[i + 1] - w
            gp = (gvals[i + 1] - gvals[i - 1]) / (a + b)
            total += gvals[i] * math.log(b / a) + gp * (a + b)
        re[i] = (2.0 / math.pi) * total
    return re
