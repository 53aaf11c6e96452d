"""Variable-coefficient pressure solve and the constant-density projector."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryDataError, DomainError, PositivityLoss, PressureSolveError
from .spectral import (
    EVEN,
    ScalarField,
    VectorField,
    derivative,
    divergence,
    gradient,
    inverse_laplacian,
    _truncate,
    l2_norm,
    multiply_values,
    transform_forward,
    wall_trace,
)

log = logging.getLogger(__name__)

DIVERGENCE_TOL = 1e-8
WALL_DATA_TOL = 1e-10
ABS_RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class PressureSolveParams:
    rel_tol: float = 1e-10
    max_iter: int = 200
    precond_coeff: float | None = None  # None -> midpoint of the range of 1/rho

    def __post_init__(self) -> None:
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.precond_coeff is not None and self.precond_coeff <= 0:
            raise ValueError("precond_coeff must be positive")


@dataclass(frozen=True)
class PressureResult:
    p: ScalarField
    iterations: int
    residual: float

    def __iter__(self):
        return iter((self.p, self.iterations, self.residual))


def advection(u: VectorField, dealias: bool = False) -> VectorField:
    """``(u . grad) u`` evaluated pseudospectrally."""
    uv = dict(zip("xyz", (c.values() for c in u)))
    axes = u.domain.axes
    out = []
    for c in u:
        phys = sum(uv[ax] * derivative(c, ax).values() for ax in axes)
        f = transform_forward(phys, c.parity, c.domain)
        out.append(_truncate(f) if dealias else f)
    return VectorField(*out)


def _variable_operator(b: np.ndarray, p: ScalarField) -> ScalarField:
    """``div(b grad p)`` with ``b`` given on the collocation grid."""
    terms = [derivative(multiply_values(b, derivative(p, ax)), ax) for ax in p.domain.axes]
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def _zero_mean(f: ScalarField) -> ScalarField:
    c = f.coeffs.copy()
    c[0, 0, 0] = 0.0
    return ScalarField(f.domain, f.parity, c)


def solve_variable_poisson(rho: ScalarField, rhs: ScalarField,
                           params: PressureSolveParams = PressureSolveParams(),
                           guess: ScalarField | None = None) -> PressureResult:
    """Solve ``div(rho^-1 grad p) = rhs`` with homogeneous Neumann walls.

    Preconditioned Richardson iteration
    ``p <- p + Lap^-1 (rhs - div(rho^-1 grad p)) / beta0``; with
    ``beta0`` the midpoint of ``[min 1/rho, max 1/rho]`` the error contracts
    by ``(r - 1) / (r + 1)`` per sweep, ``r`` the coefficient ratio.
    """
    if rho.parity is not EVEN or rhs.parity is not EVEN:
        raise DomainError("density and pressure data must be even fields")
    rho_vals = rho.values()
    if rho_vals.min() <= 0:
        raise PositivityLoss(f"non-positive density {rho_vals.min():.3e} in pressure solve")
    b = 1.0 / rho_vals
    beta0 = params.precond_coeff or 0.5 * (b.min() + b.max())

    mean = rhs.coeffs[0, 0, 0].real
    if mean != 0.0:
        log.debug("pressure rhs mean %.3e removed", mean)
    f = _zero_mean(rhs)
    f_norm = l2_norm(f)

    def converged(r_norm: float) -> bool:
        if f_norm <= ABS_RESIDUAL_FLOOR:
            return r_norm <= ABS_RESIDUAL_FLOOR
        return r_norm <= params.rel_tol * f_norm

    p = ScalarField.zeros(rho.domain, EVEN) if guess is None else _zero_mean(guess)
    r = f - _variable_operator(b, p)
    r_norm = l2_norm(r)
    it = 0
    while not converged(r_norm) and it < params.max_iter:
        p = p + (1.0 / beta0) * inverse_laplacian(_zero_mean(r), effective=True)
        r = f - _variable_operator(b, p)
        r_norm = l2_norm(r)
        it += 1

    # r_norm came from applying the operator to the final iterate; removing
    # the mean does not change it
    p = _zero_mean(p)
    achieved = r_norm
    residual = achieved / f_norm if f_norm > ABS_RESIDUAL_FLOOR else achieved
    if not converged(achieved):
        raise PressureSolveError(
            f"pressure iteration stopped after {it} sweeps at residual {residual:.3e}",
            residual=residual, iterations=it)
    return PressureResult(p, it, residual)


def pressure_solve(rho: ScalarField, u: VectorField,
                   params: PressureSolveParams = PressureSolveParams(),
                   forcing: VectorField | None = None,
                   guess: ScalarField | None = None,
                   dealias: bool = False,
                   adv: VectorField | None = None) -> PressureResult:
    """Pressure for the variable-density momentum equation.

    Solves ``div(rho^-1 grad p) = div(-u.grad u + forcing)``.  ``forcing``
    carries any extra acceleration that enters the momentum balance (viscous
    term, manufactured source); without it this is the inviscid problem.
    Walls carry homogeneous Neumann data, which the even basis imposes.
    ``adv`` may pass in a precomputed ``advection(u, dealias)``.
    """
    div_u = l2_norm(divergence(u))
    if div_u > DIVERGENCE_TOL:
        raise DomainError(f"velocity is not divergence-free (|div u| = {div_u:.3e})")
    if adv is None:
        adv = advection(u, dealias)
    wall = wall_trace(adv.u3)
    if wall > WALL_DATA_TOL:
        raise BoundaryDataError(f"wall-normal advection trace {wall:.3e} is not zero")
    accel = -adv if forcing is None else forcing - adv
    return solve_variable_poisson(rho, divergence(accel), params, guess)


def leray_project(u: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields with ``u3 = 0`` on walls."""
    phi = inverse_laplacian(divergence(u), effective=True)
    return u - gradient(phi)
