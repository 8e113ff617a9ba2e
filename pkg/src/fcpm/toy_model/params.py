"""Material parameters and the internal unit system.

Inputs are SI. Internally lengths are in m, time in s and mass in units of
1e10 kg, so the pressure unit is 1e10 Pa; this keeps elastic moduli and
pressures near unity. Contact tractions are further scaled by Young's
modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

MASS_UNIT = 1e10  # kg
PRESSURE_UNIT = MASS_UNIT  # Pa, since length and time units are 1
DAY = 86400.0


@dataclass(frozen=True)
class ContactInputs:
    """Contact law inputs in SI.

    Attributes:
        F: friction coefficient.
        K_n: normal stiffness (Pa/m).
        du_max: maximum normal closure (m).
        theta: dilation angle (rad).
        g0: steady-state gap (m).
        c_factor: the augmented Lagrangian constant is ``c_factor * G / h``.
        eps_open_factor: open threshold as a fraction of Young's modulus.
    """

    F: float = 0.577
    K_n: float = 1.2e9
    du_max: float = 5e-4
    theta: float = 0.0
    g0: float = 0.0
    c_factor: float = 1.0
    eps_open_factor: float = 1e-5


@dataclass(frozen=True)
class MaterialParams:
    """Poroelastic and flow parameters in SI units.

    Attributes:
        G, lam: Lame parameters (Pa).
        alpha: Biot coefficient.
        c_f: fluid compressibility (1/Pa).
        phi0: reference porosity.
        mu: viscosity (Pa s).
        K_m: matrix permeability (m^2).
        K_f: fracture permeability (m^2), used when ``cubic_law`` is off.
        a0: residual hydraulic aperture (m).
        rho0: reference density (kg/m^3).
        p0: reference pressure (Pa).
        cubic_law: use ``a^2 / 12`` for the fracture permeability.
        contact: contact law inputs.
    """

    G: float = 4.2e9
    lam: float = 2.8e9
    alpha: float = 0.8
    c_f: float = 4.6e-10
    phi0: float = 0.1
    mu: float = 1e-3
    K_m: float = 1e-13
    K_f: float = 1e-10
    a0: float = 1e-3
    rho0: float = 1000.0
    p0: float = 1e6
    cubic_law: bool = False
    contact: ContactInputs = field(default_factory=ContactInputs)

    def __post_init__(self):
        for name in ("G", "lam", "mu", "K_m", "K_f", "a0", "rho0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 < self.phi0 < 1.0:
            raise ValueError("phi0 must lie in (0, 1)")
        if self.c_f < 0:
            raise ValueError("c_f must be nonnegative")

    @property
    def young(self) -> float:
        return self.G * (3 * self.lam + 2 * self.G) / (self.lam + self.G)

    def with_contact(self, **kw) -> "MaterialParams":
        return replace(self, contact=replace(self.contact, **kw))

    def updated(self, **kw) -> "MaterialParams":
        """Copy with overrides; contact fields may be given by name too."""
        contact_names = {f.name for f in fields(ContactInputs)}
        ckw = {k: kw.pop(k) for k in list(kw) if k in contact_names}
        out = replace(self, **kw)
        return out.with_contact(**ckw) if ckw else out


@dataclass(frozen=True)
class InternalParams:
    """Parameters converted to internal units."""

    G: float
    lam: float
    alpha: float
    c_f: float
    phi0: float
    mu: float
    K_m: float
    K_f: float
    a0: float
    rho0: float
    p0: float
    cubic_law: bool
    young: float
    inv_M: float

    @classmethod
    def from_si(cls, m: MaterialParams) -> "InternalParams":
        P = PRESSURE_UNIT
        G, lam = m.G / P, m.lam / P
        return cls(
            G=G,
            lam=lam,
            alpha=m.alpha,
            c_f=m.c_f * P,
            phi0=m.phi0,
            mu=m.mu / P,
            K_m=m.K_m,
            K_f=m.K_f,
            a0=m.a0,
            rho0=m.rho0 / MASS_UNIT,
            p0=m.p0 / P,
            cubic_law=m.cubic_law,
            young=m.young / P,
            inv_M=(m.alpha - m.phi0) * (1 - m.alpha) / (lam + 2 * G / 3),
        )


def deg(x: float) -> float:
    return math.radians(x)
