import math

import numpy as np
import pytest

from nlmedium.medium import MediumParams, NuConstant, NuTabulated, NuZero, gamma_response
from nlmedium.nonlinear import lambda0_tensor


def naive_displacement_line(comb, medium, lam, omega_out):
    """Second, independent constitutive-law implementation.

    Enumerates the two mixing channels with plain Python loops over
    ordered line triples, building every slot-dressed coupling tensor from
    scratch, and reduces with math.fsum like the production path (the sum
    is order-independent, so sharing the reduction does not share code
    paths).
    """
    lines = list(comb.lines)
    parts = []
    for w, a in lines:
        if abs(w - omega_out) <= comb.tolerance:
            parts.append(medium.eps0 * a + medium.g * (gamma_response(medium, w).T @ a))
    for wj, aj in lines:
        for wk, ak in lines:
            for wl, al in lines:
                out_a = math.fsum((wj, wk, -wl))
                if abs(out_a - omega_out) <= comb.tolerance:
                    t = lambda0_tensor(lam, medium, wj, out_a, wk, wl) * medium.alpha**4
                    vec = np.zeros(3, dtype=complex)
                    for g in range(3):
                        acc = 0.0 + 0.0j
                        for x in range(3):
                            for n in range(3):
                                for m in range(3):
                                    acc += t[x, g, n, m] * aj[x] * ak[n] * np.conj(al[m])
                        vec[g] = acc
                    parts.append(vec / 16.0)
                out_b = math.fsum((wj, -wk, wl))
                if abs(out_b - omega_out) <= comb.tolerance:
                    t = lambda0_tensor(lam, medium, wj, wk, wl, out_b) * medium.alpha**4
                    vec = np.zeros(3, dtype=complex)
                    for g in range(3):
                        acc = 0.0 + 0.0j
                        for x in range(3):
                            for b in range(3):
                                for n in range(3):
                                    acc += t[x, b, n, g] * aj[x] * np.conj(ak[b]) * al[n]
                        vec[g] = acc
                    parts.append(vec / 16.0)
    out = np.zeros(3, dtype=complex)
    for g in range(3):
        out[g] = complex(
            math.fsum(p[g].real for p in parts), math.fsum(p[g].imag for p in parts)
        )
    return out


@pytest.fixture
def naive_line_oracle():
    return naive_displacement_line


@pytest.fixture
def lossless():
    return MediumParams(omega0=1.0, chi_s=1.0, alpha=0.5, rho=1.0, nu=NuZero(), loop_cutoff=30.0)


@pytest.fixture
def lossy():
    """Constant reservoir coupling, moderate damping."""
    return MediumParams(
        omega0=1.0, chi_s=1.0, alpha=0.5, rho=0.2, nu=NuConstant(0.1, 10.0), loop_cutoff=30.0
    )


@pytest.fixture
def smooth_lossy():
    """Gaussian-tapered tabulated coupling: no support-edge jump."""
    grid = np.linspace(0.0, 16.0, 400)
    return MediumParams(
        omega0=1.0,
        chi_s=1.0,
        alpha=0.5,
        rho=0.05,
        nu=NuTabulated(grid, 0.1 * np.exp(-((grid / 4.0) ** 2))),
        loop_cutoff=25.0,
    )
