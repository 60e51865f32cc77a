"""Photon-matter field space: kernels, propagators, loop dressing.

Plane-wave convention: the wavevector points along the z axis, so the
transverse projector is diag(1, 1, 0) for k > 0.  At k = 0 the curl term
vanishes and no direction is singled out, so the projector degenerates to
the identity and the kernel is invertible on the full space.

The quadratic photon kernel on the transverse subspace is

    K_tot(w, k) = eps0 w**2 - k**2/mu0 - g w**2 alpha**2 Gamma(w),

vanishing on the vacuum light cone for g = 0 (with eps0*mu0*c**2 = 1); its
transverse inverse is the photon Green function D.  Matter and mixing
blocks of the tree propagator matrix carry the occupancy flag g so that a
vacuum region decouples the sectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DysonPoleError, InputError, LoopConvergenceError, PropagatorPoleError
from .medium import MediumParams, gamma_response
from .nonlinear import lambda0_tensor

__all__ = [
    "PlaneWaveContext",
    "PropagatorMatrix",
    "MeanField",
    "transverse_projector",
    "total_kernel",
    "photon_green",
    "total_source",
    "mean_fields",
    "tree_propagators",
    "vertex",
    "LoopQuadrature",
    "SelfEnergyResult",
    "self_energy",
    "DressedPropagators",
    "dyson_dress",
]


@dataclass(frozen=True)
class PlaneWaveContext:
    """One transverse plane-wave mode: |k|, polarization, frequency."""

    k: float
    polarization: np.ndarray
    omega: float

    def __post_init__(self):
        if self.k < 0:
            raise InputError("wavevector magnitude must be non-negative")
        pol = np.asarray(self.polarization, dtype=float)
        if pol.shape != (3,) or abs(pol @ pol - 1.0) > 1e-12:
            raise InputError("polarization must be a unit 3-vector")
        object.__setattr__(self, "polarization", pol)


def transverse_projector(k: float) -> np.ndarray:
    """P_T for a z-directed wavevector; identity in the k -> 0 limit."""
    if k == 0.0:
        return np.eye(3)
    return np.diag([1.0, 1.0, 0.0])


@dataclass(frozen=True)
class PropagatorMatrix:
    """2x2 block matrix of 3x3 propagators in {A, X} field space."""

    aa: np.ndarray
    ax: np.ndarray
    xa: np.ndarray
    xx: np.ndarray

    def block(self, i: str, j: str) -> np.ndarray:
        return {"AA": self.aa, "AX": self.ax, "XA": self.xa, "XX": self.xx}[i + j]

    def mixing_reciprocity_defect(self) -> float:
        """max |G_AX - G_XA^T|; zero for isotropic media."""
        return float(np.max(np.abs(self.ax - self.xa.T)))


@dataclass(frozen=True)
class MeanField:
    """Classical mean fields per frequency sample."""

    freq_grid: np.ndarray
    m: np.ndarray
    m_prime: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.freq_grid, dtype=float)
        m = np.asarray(self.m, dtype=complex)
        mp = np.asarray(self.m_prime, dtype=complex)
        if m.shape != (grid.size, 3) or mp.shape != (grid.size, 3):
            raise InputError("mean fields must be (n, 3) arrays on the grid")
        object.__setattr__(self, "freq_grid", grid)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "m_prime", mp)


def total_kernel(medium: MediumParams, ctx: PlaneWaveContext) -> np.ndarray:
    """Quadratic photon kernel K_tot(w, k), 3x3 complex."""
    w = ctx.omega
    pt = transverse_projector(ctx.k)
    kernel = medium.eps0 * w**2 * np.eye(3, dtype=complex)
    kernel -= (ctx.k**2 / medium.mu0) * pt
    if medium.g:
        kernel -= medium.g * w**2 * medium.alpha**2 * gamma_response(medium, w)
    return kernel


def photon_green(medium: MediumParams, ctx: PlaneWaveContext) -> np.ndarray:
    """Inverse of K_tot on the transverse subspace.

    For k > 0 the longitudinal row/column of the result is zero; at k = 0
    the full 3x3 kernel is inverted.  Raises ``PropagatorPoleError`` when
    the restricted kernel is singular (undamped on-shell mode).
    """
    kernel = total_kernel(medium, ctx)
    if ctx.k == 0.0:
        det = np.linalg.det(kernel)
        if abs(det) < 1e-14:
            raise PropagatorPoleError("propagator pole")
        return np.linalg.inv(kernel)
    sub = kernel[:2, :2]
    det = np.linalg.det(sub)
    if abs(det) < 1e-14:
        raise PropagatorPoleError("propagator pole")
    out = np.zeros((3, 3), dtype=complex)
    out[:2, :2] = np.linalg.inv(sub)
    return out


def total_source(medium: MediumParams, j_src, f_src, omega: float) -> np.ndarray:
    """Total linear source L(w) = i w [J + (alpha/2) g Gamma(w) f]."""
    j_src = np.asarray(j_src, dtype=complex)
    f_src = np.asarray(f_src, dtype=complex)
    coupled = j_src
    if medium.g and np.any(f_src):
        coupled = j_src + 0.5 * medium.alpha * medium.g * (gamma_response(medium, omega) @ f_src)
    return 1j * omega * coupled


def mean_fields(freq_grid, l_tot_samples, d_samples) -> MeanField:
    """Mean fields from source and Green-function samples.

        m(w)  = i w D(w) L*(w),      m'(w) = i w D(w) L(w)

    (single-mode specialization of the spatial convolution; for the
    isotropic media treated here D is symmetric, so the index order of the
    contraction is immaterial).
    """
    grid = np.asarray(freq_grid, dtype=float)
    ls = np.asarray(l_tot_samples, dtype=complex)
    ds = np.asarray(d_samples, dtype=complex)
    if ls.shape != (grid.size, 3) or ds.shape != (grid.size, 3, 3):
        raise InputError("sample shapes must be (n, 3) and (n, 3, 3)")
    m = np.einsum("n,nab,nb->na", 1j * grid, ds, np.conj(ls))
    mp = np.einsum("n,nab,nb->na", 1j * grid, ds, ls)
    return MeanField(freq_grid=grid, m=m, m_prime=mp)


def tree_propagators(medium: MediumParams, ctx: PlaneWaveContext) -> PropagatorMatrix:
    """Tree-level propagator matrix at one (w, k) sample.

    G0_AA = D;  G0_XX = g (Gamma + alpha**2 w**2 Gamma D Gamma);
    G0_AX = g alpha w D Gamma;  G0_XA = g alpha w Gamma D.
    The matter and mixing blocks vanish outside the medium (g = 0).
    """
    d = photon_green(medium, ctx)
    if medium.g == 0:
        zero = np.zeros((3, 3), dtype=complex)
        return PropagatorMatrix(aa=d, ax=zero, xa=zero.copy(), xx=zero.copy())
    gam = gamma_response(medium, ctx.omega)
    w = ctx.omega
    a = medium.alpha
    xx = gam + a**2 * w**2 * (gam @ d @ gam)
    return PropagatorMatrix(aa=d, ax=a * w * (d @ gam), xa=a * w * (gam @ d), xx=xx)


def _convert_leg(tensor: np.ndarray, axis: int, weight: np.ndarray) -> np.ndarray:
    """Contract one tensor leg with a 3x3 conversion weight."""
    converted = np.tensordot(weight, tensor, axes=([1], [axis]))
    return np.moveaxis(converted, 0, axis)


# Plain-star leg pairs of the (plain, star, plain, star) quartic pattern;
# the two-photon vertex class converts exactly one such pair.
_VERTEX_PAIRS = ((0, 1), (0, 3), (2, 1), (2, 3))


def vertex(lam0: np.ndarray, alpha: float, omega: float, photon_d: np.ndarray) -> np.ndarray:
    """Four-point vertex: matter kernel with 0, 2, or 4 photon legs.

    Each converted leg carries one factor of (alpha * w * D); the
    two-photon class sums over the four plain-star leg pairs.  With
    alpha = 0 only the all-matter contribution survives.
    """
    lam0 = np.asarray(lam0, dtype=complex)
    weight = alpha * omega * np.asarray(photon_d, dtype=complex)
    total = lam0.copy()
    for i, j in _VERTEX_PAIRS:
        total += _convert_leg(_convert_leg(lam0, i, weight), j, weight)
    all_legs = lam0
    for axis in range(4):
        all_legs = _convert_leg(all_legs, axis, weight)
    return total + all_legs


@dataclass(frozen=True)
class LoopQuadrature:
    """Trapezoidal loop-integral settings: node count and hard cutoff."""

    n_points: int
    cutoff: float

    def __post_init__(self):
        if self.n_points < 64:
            raise InputError("loop quadrature needs at least 64 points")
        if self.cutoff <= 0:
            raise InputError("loop cutoff must be positive")


@dataclass(frozen=True)
class SelfEnergyResult:
    """Loop integral value with its convergence diagnostics."""

    value: np.ndarray
    error_estimate: float
    discretization_error: float
    tail_error: float


def _internal_xx(medium: MediumParams, omega: float) -> np.ndarray:
    """Time-ordered tree matter block at k = 0, in pole-safe form.

    The loop runs over the time-ordered propagator, which for the Hermitian
    response used here equals the physical branch evaluated at |w| (even in
    the loop frequency); the retarded branch would integrate to zero over a
    symmetric window by upper-half analyticity.  At k = 0,
    ``w**2 D(w, 0) = (eps0 I - g alpha**2 Gamma(w))^-1`` exactly, so
    ``G0_XX = Gamma + alpha**2 Gamma M^-1 Gamma`` stays finite at w = 0.
    """
    gam = gamma_response(medium, abs(omega))
    m = medium.eps0 * np.eye(3, dtype=complex) - medium.g * medium.alpha**2 * gam
    return medium.g * (gam + medium.alpha**2 * (gam @ np.linalg.solve(m, gam)))


def _loop_trapezoid(medium, vert, cutoff, n_points):
    nodes = np.linspace(-cutoff, cutoff, n_points)
    samples = np.asarray([np.einsum("abmg,bm->ag", vert, _internal_xx(medium, float(om))) for om in nodes])
    return np.trapezoid(samples, nodes, axis=0) / (2.0 * np.pi)


def self_energy(
    medium: MediumParams,
    lam: np.ndarray,
    omega: float,
    quadrature: LoopQuadrature,
) -> SelfEnergyResult:
    """One-loop self-energy of the matter sector.

        Pi_ag(w) = integral dW/(2 pi) V_abmg(w) G0_XX;bm(W)

    over [-cutoff, cutoff].  The external frequency enters only through
    the vertex; the internal line is the tree matter propagator at k = 0.
    The reported error estimate combines a trapezoid Richardson term
    (node count halved) with a cutoff-sensitivity term (window halved at
    fixed node spacing).  The integral is declared not converged when the
    discretization term alone exceeds 10% of the value magnitude; the
    window term is reported but does not gate, so deliberately narrow
    diagnostic windows (e.g. below an undamped resonance) stay usable.
    """
    pol = np.array([1.0, 0.0, 0.0])
    ctx_ext = PlaneWaveContext(k=0.0, polarization=pol, omega=float(omega))
    lam0 = lambda0_tensor(lam, medium, omega, omega, omega, omega)
    d_ext = photon_green(medium, ctx_ext)
    vert = vertex(lam0, medium.alpha, omega, d_ext)

    n = quadrature.n_points
    cut = quadrature.cutoff
    full = _loop_trapezoid(medium, vert, cut, n)
    half_nodes = _loop_trapezoid(medium, vert, cut, n // 2)
    # composite trapezoid is O(h^2): Richardson factor 1/3
    disc = float(np.max(np.abs(full - half_nodes))) / 3.0
    half_cut = _loop_trapezoid(medium, vert, cut / 2.0, n // 2 + 1)
    tail = float(np.max(np.abs(full - half_cut)))
    scale = float(np.max(np.abs(full)))
    if scale > 0.0 and disc > 0.1 * scale:
        raise LoopConvergenceError("loop integral not converged at this cutoff")
    return SelfEnergyResult(
        value=full, error_estimate=disc + tail, discretization_error=disc, tail_error=tail
    )


@dataclass(frozen=True)
class DressedPropagators:
    """Both Dyson forms: single insertion and geometric resummation."""

    single: PropagatorMatrix
    resummed: PropagatorMatrix


def dyson_dress(g0: PropagatorMatrix, pi: np.ndarray) -> DressedPropagators:
    """Dress the tree propagators with a matter-block self-energy.

    The self-energy occupies only the XX block, so the Dyson series
    collapses to

        single:   G_ij = G0_ij + G0_iX (i Pi) G0_Xj
        resummed: G_ij = G0_ij + G0_iX (i Pi) (1 - G0_XX i Pi)^-1 G0_Xj

    Raises ``DysonPoleError`` when the resummation matrix is singular
    (a dressed resonance).
    """
    pi = np.asarray(pi, dtype=complex)
    if pi.shape != (3, 3):
        raise InputError("self-energy block must be 3x3")
    ipi = 1j * pi
    left = {"A": g0.ax, "X": g0.xx}
    right = {"A": g0.xa, "X": g0.xx}

    def build(middle):
        return PropagatorMatrix(
            aa=g0.aa + left["A"] @ middle @ right["A"],
            ax=g0.ax + left["A"] @ middle @ right["X"],
            xa=g0.xa + left["X"] @ middle @ right["A"],
            xx=g0.xx + left["X"] @ middle @ right["X"],
        )

    single = build(ipi)
    resum_matrix = np.eye(3, dtype=complex) - g0.xx @ ipi
    det = np.linalg.det(resum_matrix)
    if abs(det) < 1e-14 * max(1.0, float(np.max(np.abs(resum_matrix))) ** 3):
        raise DysonPoleError("Dyson resummation pole")
    middle = ipi @ np.linalg.inv(resum_matrix)
    resummed = build(middle)
    return DressedPropagators(single=single, resummed=resummed)
