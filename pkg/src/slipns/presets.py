"""Initial-condition presets.

Every preset is compatible with the slip walls by construction: the density
is a cosine series in z (zero normal derivative) and the velocity has
parities (even, even, odd) and zero divergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .elliptic import leray_project
from .spectral import (
    EVEN,
    VECTOR_PARITIES,
    Domain,
    ScalarField,
    VectorField,
    transform_forward,
)
from .state import FlowState


@dataclass(frozen=True)
class InitialData:
    """Preset output: the state plus analytic callables when they exist."""

    state: FlowState
    rho_fn: Callable | None = None
    u_fns: tuple[Callable, Callable, Callable] | None = None


def shear_decay(domain: Domain, A: float = 1.0, rho0: float = 1.0) -> InitialData:
    """``rho = rho0``, ``u = (A cos(pi z), 0, 0)``; decays as ``exp(-nu pi^2 t)``."""
    rho_fn = lambda X, Y, Z: rho0 + 0 * X * Y * Z
    u_fns = (lambda X, Y, Z: A * np.cos(np.pi * Z) + 0 * X * Y,
             lambda X, Y, Z: 0 * X * Y * Z,
             lambda X, Y, Z: 0 * X * Y * Z)
    return _from_functions(domain, rho_fn, u_fns)


def stratified_vortex(domain: Domain, rho_bar: float = 1.0, a: float = 0.3,
                      U: float = 0.1, V: float | None = None) -> InitialData:
    """Cellular flow over a density perturbation ``a cos(2 pi x/Lx) cos(pi z)``.

    The velocity is the curl of the vector potential
    ``(V sin(2 pi y/Ly) sin(pi z) / ky, -U sin(2 pi x/Lx) sin(pi z) / kx, 0)``
    (the y part only in 3D), so it is divergence-free and its wall-normal
    component vanishes at the walls.  The density cells are offset from the
    flow cells, which sets up baroclinic driving.
    """
    if not 0 <= a < rho_bar:
        raise ValueError("stratified_vortex needs 0 <= a < rho_bar")
    Lx, Ly = domain.Lx, domain.Ly
    kx, ky, kz = 2 * np.pi / Lx, 2 * np.pi / Ly, np.pi
    if V is None:
        V = U if domain.dim == 3 else 0.0
    if domain.dim == 2:
        V = 0.0

    def rho_fn(X, Y, Z):
        return rho_bar + a * np.cos(kx * X) * np.cos(kz * Z) + 0 * Y

    # A = (V/ky sin(ky y) sin(kz z), -U/kx sin(kx x) sin(kz z), 0)
    def u1(X, Y, Z):
        return U * kz / kx * np.sin(kx * X) * np.cos(kz * Z) + 0 * Y

    def u2(X, Y, Z):
        return V * kz / ky * np.sin(ky * Y) * np.cos(kz * Z) + 0 * X

    def u3(X, Y, Z):
        return -(U * np.cos(kx * X) + V * np.cos(ky * Y)) * np.sin(kz * Z)

    return _from_functions(domain, rho_fn, (u1, u2, u3))


def random_smooth(domain: Domain, seed: int = 0, decay: float = 4.0,
                  amplitude: float = 1.0, rho_bar: float = 1.0,
                  rho_amplitude: float = 0.0) -> InitialData:
    """Seeded random fields with coefficients scaled by ``(1 + |k|^2)^(-decay/2)``.

    The velocity is projected divergence-free and rescaled to max speed
    ``amplitude``; the density fluctuation is rescaled to max
    ``rho_amplitude`` around ``rho_bar``.  Content stays inside the 2/3
    band so products are alias-free.
    """
    if not 0 <= rho_amplitude < rho_bar:
        raise ValueError("random_smooth needs 0 <= rho_amplitude < rho_bar")
    rng = np.random.default_rng(seed)
    envelope = (1.0 + domain.k2) ** (-decay / 2) * domain.dealias_mask

    def draw(parity) -> ScalarField:
        c = (rng.standard_normal(domain.spectral_shape)
             + 1j * rng.standard_normal(domain.spectral_shape)) * envelope
        if parity is not EVEN:
            c[0] = 0.0
        # round trip through physical space restores Hermitian symmetry
        f = transform_forward(ScalarField(domain, parity, c).values(), parity, domain)
        return ScalarField(domain, parity, f.coeffs * domain.dealias_mask)

    u = leray_project(VectorField(*(draw(p) for p in VECTOR_PARITIES)))
    speed = float(np.max(np.sqrt(np.sum(u.values() ** 2, axis=0))))
    if speed > 0:
        u = (amplitude / speed) * u
    drho = draw(EVEN)
    c = drho.coeffs.copy()
    c[0, 0, 0] = 0.0
    drho = ScalarField(domain, EVEN, c)
    peak = float(np.max(np.abs(drho.values())))
    rho_c = np.zeros(domain.spectral_shape, dtype=complex)
    rho_c[0, 0, 0] = rho_bar
    rho = ScalarField(domain, EVEN, rho_c)
    if peak > 0 and rho_amplitude > 0:
        rho = rho + (rho_amplitude / peak) * drho
    return InitialData(FlowState(0.0, rho, u))


def _from_functions(domain: Domain, rho_fn, u_fns) -> InitialData:
    rho = ScalarField.from_function(domain, EVEN, rho_fn)
    u = VectorField(*(ScalarField.from_function(domain, p, f)
                      for p, f in zip(VECTOR_PARITIES, u_fns)))
    return InitialData(FlowState(0.0, rho, u), rho_fn, tuple(u_fns))


PRESETS = {
    "shear_decay": shear_decay,
    "stratified_vortex": stratified_vortex,
    "random_smooth": random_smooth,
}


def make_initial_data(name: str, domain: Domain, params: dict | None = None,
                      seed: int | None = None) -> InitialData:
    if name not in PRESETS:
        raise KeyError(f"unknown initial-condition preset {name!r}; "
                       f"choose from {sorted(PRESETS)}")
    kwargs = dict(params or {})
    if name == "random_smooth" and seed is not None:
        kwargs.setdefault("seed", seed)
    return PRESETS[name](domain, **kwargs)
