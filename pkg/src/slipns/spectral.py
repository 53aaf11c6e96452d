"""Fourier x cosine/sine spectral substrate for the slip channel.

Fields live on ``[0, Lx) x [0, Ly) x [0, 1]``, periodic in x and y.  In the
wall-normal direction an Even field is a cosine series (zero normal
derivative at the walls) and an Odd field is a sine series (zero value at the
walls), so the slip conditions hold exactly by construction.

Physical arrays have shape ``(Nz, Ny, Nx)`` in C order, i.e. x varies
fastest.  The z collocation nodes are the cell midpoints ``(j + 1/2) / Nz``,
shared by both parities so that mixed products need no interpolation.
Spectral coefficients have shape ``(Nz, Ny, Nx // 2 + 1)``; index ``m`` on
axis 0 selects ``cos(m pi z)`` or ``sin(m pi z)`` and the Fourier axes use
the ``rfft`` half-spectrum, which keeps the physical field real.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, ParityError, SolvabilityError

SOLVABILITY_TOL = 1e-12


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"

    def flip(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN

    def __mul__(self, other: "Parity") -> "Parity":
        return Parity.EVEN if self is other else Parity.ODD


EVEN = Parity.EVEN
ODD = Parity.ODD


@dataclass(frozen=True)
class Domain:
    """Channel geometry and resolution.

    ``dim == 2`` collapses y to a single constant mode (``Ny == 1``); the
    code path is otherwise identical to the 3D one.
    """

    Nx: int
    Ny: int
    Nz: int
    Lx: float = 1.0
    Ly: float = 1.0
    dim: int = 3
    Lz: float = field(default=1.0)

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise DomainError(f"dim must be 2 or 3, got {self.dim}")
        if self.Lz != 1.0:
            raise DomainError("wall-normal extent Lz is fixed to 1")
        if not (self.Lx > 0 and self.Ly > 0):
            raise DomainError("Lx and Ly must be positive")
        if self.Nx < 4 or self.Nx % 2:
            raise DomainError(f"Nx must be even and >= 4, got {self.Nx}")
        if self.dim == 3 and (self.Ny < 4 or self.Ny % 2):
            raise DomainError(f"Ny must be even and >= 4, got {self.Ny}")
        if self.dim == 2 and self.Ny != 1:
            raise DomainError("2D domains use Ny = 1")
        if self.Nz < 4:
            raise DomainError(f"Nz must be >= 4, got {self.Nz}")

    @classmethod
    def channel_2d(cls, Nx: int, Nz: int, Lx: float = 1.0) -> "Domain":
        return cls(Nx=Nx, Ny=1, Nz=Nz, Lx=Lx, Ly=1.0, dim=2)

    def to_dict(self) -> dict:
        return {"Lx": self.Lx, "Ly": self.Ly, "Lz": self.Lz, "Nx": self.Nx,
                "Ny": self.Ny, "Nz": self.Nz, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        return cls(Nx=int(d["Nx"]), Ny=int(d["Ny"]), Nz=int(d["Nz"]),
                   Lx=float(d["Lx"]), Ly=float(d["Ly"]), dim=int(d["dim"]),
                   Lz=float(d.get("Lz", 1.0)))

    # -- grids -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.Nz, self.Ny, self.Nx)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.Nz, self.Ny, self.Nx // 2 + 1)

    @property
    def volume(self) -> float:
        return self.Lx * self.Ly * self.Lz

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * (self.Lx / self.Nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * (self.Ly / self.Ny)

    @cached_property
    def z(self) -> np.ndarray:
        return (np.arange(self.Nz) + 0.5) / self.Nz

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable ``(X, Y, Z)`` coordinate arrays."""
        return (self.x[None, None, :], self.y[None, :, None],
                self.z[:, None, None])

    @property
    def axes(self) -> str:
        """Axes with non-trivial derivatives."""
        return "xz" if self.dim == 2 else "xyz"

    @property
    def h(self) -> float:
        """Smallest collocation spacing."""
        spacings = [self.Lx / self.Nx, self.Lz / self.Nz]
        if self.dim == 3:
            spacings.append(self.Ly / self.Ny)
        return min(spacings)

    # -- wavenumbers -------------------------------------------------------

    @cached_property
    def nx(self) -> np.ndarray:
        return np.arange(self.Nx // 2 + 1)

    @cached_property
    def ny(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.Ny, 1.0 / self.Ny)).astype(int)

    @cached_property
    def m(self) -> np.ndarray:
        return np.arange(self.Nz)

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi / self.Lx * self.nx

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi / self.Ly * self.ny

    @cached_property
    def kz(self) -> np.ndarray:
        return np.pi * self.m

    @cached_property
    def kx_deriv(self) -> np.ndarray:
        # Nyquist mode has no odd-symmetric derivative on the grid
        k = self.kx.copy()
        k[-1] = 0.0
        return k

    @cached_property
    def ky_deriv(self) -> np.ndarray:
        k = self.ky.copy()
        if self.Ny > 1:
            k[self.Ny // 2] = 0.0
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        """``kx^2 + ky^2 + (m pi)^2`` on the spectral grid."""
        return (self.kx[None, None, :] ** 2 + self.ky[None, :, None] ** 2
                + self.kz[:, None, None] ** 2)

    @cached_property
    def k2_deriv(self) -> np.ndarray:
        """Squared symbol of the discrete gradient (Nyquist x/y dropped)."""
        return (self.kx_deriv[None, None, :] ** 2
                + self.ky_deriv[None, :, None] ** 2
                + self.kz[:, None, None] ** 2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep_x = 3 * self.nx < self.Nx
        keep_y = 3 * np.abs(self.ny) < max(self.Ny, 3)
        keep_z = 3 * self.m < 2 * self.Nz
        return keep_z[:, None, None] & keep_y[None, :, None] & keep_x[None, None, :]

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """Quadrature weights turning ``sum w |c|^2`` into ``int |f|^2``.

        Interior rfft columns stand for a mode and its conjugate; cosine and
        sine modes with ``m >= 1`` average to one half over z.
        """
        wx = np.full(self.Nx // 2 + 1, 2.0)
        wx[0] = 1.0
        wx[-1] = 1.0
        wz = np.full(self.Nz, 0.5)
        wz[0] = 1.0
        return self.volume * wz[:, None, None] * np.ones(self.Ny)[None, :, None] * wx[None, None, :]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One scalar unknown as spectral coefficients with a parity tag."""

    domain: Domain
    parity: Parity
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.coeffs.shape != self.domain.spectral_shape:
            raise DomainError(
                f"coefficient shape {self.coeffs.shape} does not match "
                f"{self.domain.spectral_shape}")
        if self.parity is ODD and np.any(self.coeffs[0] != 0):
            raise ParityError("odd fields carry no m = 0 mode")

    @classmethod
    def zeros(cls, domain: Domain, parity: Parity) -> "ScalarField":
        return cls(domain, parity, np.zeros(domain.spectral_shape, dtype=complex))

    @classmethod
    def from_function(cls, domain: Domain, parity: Parity,
                      fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
                      ) -> "ScalarField":
        X, Y, Z = domain.mesh
        values = np.broadcast_to(fn(X, Y, Z), domain.shape)
        return transform_forward(values, parity, domain)

    @cached_property
    def _physical(self) -> np.ndarray:
        v = transform_inverse(self)
        v.flags.writeable = False
        return v

    def values(self) -> np.ndarray:
        """Collocation values (cached, read-only)."""
        return self._physical

    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0].real) if self.parity is EVEN else 0.0

    def _check(self, other: "ScalarField") -> None:
        if other.domain is not self.domain and other.domain != self.domain:
            raise DomainError("fields live on different domains")
        if other.parity is not self.parity:
            raise ParityError(f"cannot combine {self.parity.value} and "
                              f"{other.parity.value} fields")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.domain, self.parity, self.coeffs + other.coeffs)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.domain, self.parity, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.domain, self.parity, a * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.domain, self.parity, -self.coeffs)


VECTOR_PARITIES = (EVEN, EVEN, ODD)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Velocity-like triple with component parities (Even, Even, Odd)."""

    u1: ScalarField
    u2: ScalarField
    u3: ScalarField

    def __post_init__(self) -> None:
        for c, p in zip(self, VECTOR_PARITIES):
            if c.parity is not p:
                raise ParityError("vector components must have parities "
                                  "(even, even, odd)")
        if not (self.u1.domain == self.u2.domain == self.u3.domain):
            raise DomainError("vector components live on different domains")

    @property
    def domain(self) -> Domain:
        return self.u1.domain

    @classmethod
    def zeros(cls, domain: Domain) -> "VectorField":
        return cls(*(ScalarField.zeros(domain, p) for p in VECTOR_PARITIES))

    def __iter__(self) -> Iterator[ScalarField]:
        return iter((self.u1, self.u2, self.u3))

    def values(self) -> np.ndarray:
        return np.stack([c.values() for c in self])

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(*(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(*(a - b for a, b in zip(self, other)))

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(*(a * c for c in self))

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(*(-c for c in self))


# -- transforms -----------------------------------------------------------

def _check_values(values: np.ndarray, domain: Domain) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != domain.shape:
        raise DomainError(f"collocation array has shape {values.shape}, "
                          f"expected {domain.shape}")
    if np.iscomplexobj(values):
        raise DomainError("collocation values must be real")
    return values.astype(float, copy=False)


def _rfft_xy(a: np.ndarray, d: Domain) -> np.ndarray:
    if d.Ny == 1:
        return np.fft.rfft(a, axis=-1) / d.Nx
    return sfft.rfftn(a, axes=(-2, -1)) / (d.Nx * d.Ny)


def _irfft_xy(c: np.ndarray, d: Domain) -> np.ndarray:
    if d.Ny == 1:
        return np.fft.irfft(c * d.Nx, n=d.Nx, axis=-1)
    return sfft.irfftn(c * (d.Nx * d.Ny), s=(d.Ny, d.Nx), axes=(-2, -1))


def transform_forward(values: np.ndarray, parity: Parity, domain: Domain) -> ScalarField:
    """Collocation values -> spectral coefficients."""
    v = _check_values(values, domain)
    Nz = domain.Nz
    if parity is EVEN:
        zc = sfft.dct(v, type=2, axis=0) / Nz
        zc[0] *= 0.5
    else:
        s = sfft.dst(v, type=2, axis=0) / Nz
        zc = np.zeros_like(s)
        zc[1:] = s[:-1]  # sine mode Nz is the unrepresentable Nyquist
    return ScalarField(domain, parity, _rfft_xy(zc, domain))


def transform_inverse(f: ScalarField) -> np.ndarray:
    """Spectral coefficients -> real collocation values of shape ``(Nz, Ny, Nx)``."""
    d = f.domain
    if not f.coeffs.any():
        return np.zeros(d.shape)
    zc = _irfft_xy(f.coeffs, d)
    if f.parity is EVEN:
        y = zc * d.Nz
        y[0] *= 2.0
        return sfft.idct(y, type=2, axis=0)
    y = np.zeros_like(zc)
    y[:-1] = zc[1:] * d.Nz
    return sfft.idst(y, type=2, axis=0)


def evaluate_at_z(f: ScalarField, z: float) -> np.ndarray:
    """Field sampled on the horizontal grid at height ``z`` by summing its series."""
    d = f.domain
    basis = np.cos(d.kz * z) if f.parity is EVEN else np.sin(d.kz * z)
    plane = np.tensordot(basis, f.coeffs, axes=(0, 0))
    return _irfft_xy(plane, d)


def extrema(f: ScalarField, refine: int = 4) -> tuple[float, float]:
    """Min and max of the series on a grid ``refine`` times finer, walls included."""
    d = f.domain
    nx = d.Nx * refine
    ny = d.Ny * refine if d.Ny > 1 else 1
    z = np.linspace(0.0, 1.0, d.Nz * refine + 1)
    basis = np.cos(np.outer(z, d.kz)) if f.parity is EVEN else np.sin(np.outer(z, d.kz))
    planes = np.tensordot(basis, f.coeffs, axes=(1, 0))
    # zero-pad the horizontal spectrum
    padded = np.zeros((len(z), ny, nx // 2 + 1), dtype=complex)
    half = d.Ny // 2
    if d.Ny > 1:
        padded[:, :half, :d.Nx // 2 + 1] = planes[:, :half]
        padded[:, ny - half:, :d.Nx // 2 + 1] = planes[:, half:]
    else:
        padded[:, :, :d.Nx // 2 + 1] = planes
    # Nyquist columns of the coarse grid are split between +/- k on the fine grid
    padded[:, :, d.Nx // 2] *= 0.5
    if d.Ny > 1:
        padded[:, half, :] *= 0.5
        padded[:, ny - half, :] = padded[:, half, :]
    vals = sfft.irfftn(padded * (nx * ny), s=(ny, nx), axes=(1, 2))
    return float(vals.min()), float(vals.max())


def wall_trace(f: ScalarField) -> float:
    """Largest absolute value of ``f`` on the walls ``z = 0`` and ``z = 1``."""
    return max(float(np.max(np.abs(evaluate_at_z(f, z)))) for z in (0.0, 1.0))


# -- operators ------------------------------------------------------------

def derivative(f: ScalarField, axis: str) -> ScalarField:
    """Spectral derivative; ``axis='z'`` flips parity."""
    d = f.domain
    if axis == "x":
        return ScalarField(d, f.parity, f.coeffs * (1j * d.kx_deriv)[None, None, :])
    if axis == "y":
        return ScalarField(d, f.parity, f.coeffs * (1j * d.ky_deriv)[None, :, None])
    if axis == "z":
        # d/dz cos(m pi z) = -m pi sin(m pi z);  d/dz sin(m pi z) = m pi cos(m pi z)
        sign = -1.0 if f.parity is EVEN else 1.0
        return ScalarField(d, f.parity.flip(), sign * f.coeffs * d.kz[:, None, None])
    raise ValueError(f"unknown axis {axis!r}")


def _truncate(f: ScalarField) -> ScalarField:
    return ScalarField(f.domain, f.parity, f.coeffs * f.domain.dealias_mask)


def dealias(f: ScalarField) -> ScalarField:
    """2/3-rule truncation."""
    return _truncate(f)


def multiply(f: ScalarField, g: ScalarField, dealias: bool = False) -> ScalarField:
    """Pointwise product evaluated on the collocation grid."""
    if f.domain != g.domain:
        raise DomainError("fields live on different domains")
    out = transform_forward(f.values() * g.values(), f.parity * g.parity, f.domain)
    return _truncate(out) if dealias else out


def multiply_values(values: np.ndarray, f: ScalarField, dealias: bool = False) -> ScalarField:
    """Product of an Even collocation array (e.g. ``1/rho``) with a field."""
    if not f.coeffs.any():
        return f
    out = transform_forward(values * f.values(), f.parity, f.domain)
    return _truncate(out) if dealias else out


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.domain, f.parity, -f.domain.k2_deriv * f.coeffs)


def inverse_laplacian(f: ScalarField, *, effective: bool = False) -> ScalarField:
    """Solve ``laplacian(g) = f`` with zero-mean gauge.

    Even input is a Neumann problem and must have (numerically) zero mean.
    ``effective=True`` uses the symbol of the discrete gradient, which drops
    the Nyquist wavenumbers; this makes it an exact inverse of
    ``divergence(gradient(.))``.
    """
    d = f.domain
    if f.parity is EVEN and abs(f.coeffs[0, 0, 0]) > SOLVABILITY_TOL:
        raise SolvabilityError(
            f"Neumann problem needs zero-mean data, got mean {abs(f.coeffs[0, 0, 0]):.3e}")
    k2 = d.k2_deriv if effective else d.k2
    safe = np.where(k2 > 0, k2, 1.0)
    g = np.where(k2 > 0, -f.coeffs / safe, 0.0)
    return ScalarField(d, f.parity, g)


def gradient(f: ScalarField) -> VectorField:
    if f.parity is not EVEN:
        raise ParityError("gradient is defined for even scalars")
    return VectorField(derivative(f, "x"), derivative(f, "y"), derivative(f, "z"))


def divergence(u: VectorField) -> ScalarField:
    return derivative(u.u1, "x") + derivative(u.u2, "y") + derivative(u.u3, "z")


def l2_norm(f: ScalarField) -> float:
    """``L^2(Omega)`` norm via Parseval."""
    w = f.domain.mode_weights
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))
