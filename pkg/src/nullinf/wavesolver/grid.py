"""Characteristic grids and spherical-mode forcing."""

from dataclasses import dataclass

import numpy as np

from ..errors import CFLViolation, UnsupportedMode


def bump(z):
    """exp(1 - 1/(1 - z^2)) on |z| < 1, zero outside; equals 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    zz = z[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - zz * zz))
    return out


@dataclass(frozen=True)
class ForcingSpec:
    """f(t, r) Y_ell with a product bump supported in t_range x r_range."""

    amplitude: float = 1.0
    t_range: tuple = (0.0, 1.0)
    r_range: tuple = (2.5, 3.0)
    order: int = 1
    ell: int = 0

    def __post_init__(self):
        if self.ell < 0 or int(self.ell) != self.ell:
            raise UnsupportedMode("ell must be a nonnegative integer")
        if self.ell > 8:
            raise UnsupportedMode("modes above ell = 8 are not supported")
        if not self.r_range[0] > 0:
            raise ValueError("forcing must be supported away from r = 0")
        if self.t_range[1] <= self.t_range[0] or self.r_range[1] <= self.r_range[0]:
            raise ValueError("empty forcing box")
        if self.order < 1:
            raise ValueError("bump order must be >= 1")

    def __call__(self, t, r):
        (t0, t1), (r0, r1) = self.t_range, self.r_range
        zt = (2.0 * np.asarray(t) - (t0 + t1)) / (t1 - t0)
        zr = (2.0 * np.asarray(r) - (r0 + r1)) / (r1 - r0)
        return self.amplitude * (bump(zt) * bump(zr)) ** self.order

    @property
    def u_range(self):
        return self.t_range[0] - self.r_range[1], self.t_range[1] - self.r_range[0]

    @property
    def v_range(self):
        return self.t_range[0] + self.r_range[0], self.t_range[1] + self.r_range[1]

    def scaled(self, a):
        return ForcingSpec(a * self.amplitude, self.t_range, self.r_range, self.order, self.ell)


@dataclass
class NullGrid:
    """Nodes u_0 < u_1 < ... and v_0 < v_1 < ...; the u nodes are a prefix of the v nodes."""

    v: np.ndarray
    nu: int

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.nu < 2 or self.nu > self.v.size:
            raise CFLViolation("need 2 <= nu <= nv")
        if np.any(np.diff(self.v) <= 0):
            raise CFLViolation("grid nodes must be strictly increasing")

    @property
    def u(self):
        return self.v[: self.nu]

    @property
    def shape(self):
        return self.nu, self.v.size

    def refine(self):
        """Insert midpoints into every interval (halves all step sizes)."""
        mid = 0.5 * (self.v[1:] + self.v[:-1])
        v = np.empty(2 * self.v.size - 1)
        v[0::2] = self.v
        v[1::2] = mid
        return NullGrid(v, 2 * self.nu - 1)


def make_grid(u0=-3.2, u1=0.0, h=0.05, v_uniform=12.0, v_max=4e5, growth=1.02):
    """Uniform spacing h on [u0, v_uniform], then steps growing by `growth` up to v_max."""
    if h <= 0 or growth < 1:
        raise CFLViolation("invalid step parameters")
    m = int(round((v_uniform - u0) / h))
    v = list(u0 + h * np.arange(m + 1))
    step = h
    while v[-1] < v_max:
        step *= growth
        v.append(v[-1] + step)
    v = np.array(v)
    nu = int(np.searchsorted(v, u1 + 1e-9 * h, side="right"))
    return NullGrid(v, nu)


def grid_for(forcing, h=0.05, u1=0.0, v_max=4e5, growth=1.02, margin=0.2):
    """Grid starting just before the forcing turns on in u."""
    ua, _ = forcing.u_range
    u0 = h * np.floor((ua - margin) / h)
    return make_grid(u0, max(u1, u0 + 2 * h), h, max(forcing.v_range[1] + 2.0, u1 + 2.0), v_max, growth)
