"""Stokes problem data and the derived source fields of the biharmonic scheme.

Every field is a :class:`ScalarField`, a pure map ``(x, y, order) -> Jet2``
(vectorized over arrays of base points). A :class:`StokesProblem` turns
either a manufactured solution ``(u, p)`` or raw data ``(f, phi, g)`` into

* ``psi``: the right-hand side of ``-Lap^2 u = psi``,
* ``varphi``: the third-order boundary functions on X- and Y-edges,
* ``g``: the Dirichlet data.

In manufactured mode ``psi`` and ``varphi`` are built from ``u`` and ``phi``
only, so the pressure and the viscosity never enter the velocity solve.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import taylor as T
from .taylor import Jet2


class InsufficientOrder(ValueError):
    pass


class NoExactSolution(RuntimeError):
    pass


class ScalarField:
    """A closed-form scalar field evaluated through jets.

    ``fn(X, Y)`` receives coordinate jets and returns a jet (or a number for
    constant fields). ``max_order`` bounds the jet order the field can supply
    (``None`` for unlimited).
    """

    def __init__(self, fn: Callable, name: str = "", max_order: Optional[int] = None):
        self.fn = fn
        self.name = name
        self.max_order = max_order

    def __call__(self, x, y, order=T.DEFAULT_ORDER) -> Jet2:
        if self.max_order is not None and order > self.max_order:
            raise InsufficientOrder(f"field {self.name!r} supports jets up to order {self.max_order}, not {order}")
        X, Y = T.seed(x, y, order)
        out = self.fn(X, Y)
        if not isinstance(out, Jet2):
            out = T.constant(out, order, X.batch_shape)
        return out

    def values(self, x, y):
        return self(x, y, 0).value

    def derivative(self, m, n, name=""):
        """The field d^(m+n) f / dx^m dy^n, evaluated from a higher-order jet."""
        base = self
        mo = None if self.max_order is None else self.max_order - m - n

        def fn_at(x, y, order):
            return base(x, y, order + m + n).diff(m, n)

        return _DerivedField(fn_at, name or f"d{m},{n} {self.name}", mo)

    def __repr__(self):
        return f"ScalarField({self.name!r})"


class _DerivedField(ScalarField):
    def __init__(self, fn_at, name, max_order):
        super().__init__(None, name, max_order)
        self.fn_at = fn_at

    def __call__(self, x, y, order=T.DEFAULT_ORDER):
        if self.max_order is not None and order > self.max_order:
            raise InsufficientOrder(f"field {self.name!r} supports jets up to order {self.max_order}, not {order}")
        return self.fn_at(x, y, order)


class CachedField(ScalarField):
    """Remembers the most recent evaluation (shared by fields derived from one potential)."""

    def __init__(self, field: ScalarField):
        super().__init__(None, field.name, field.max_order)
        self.field = field
        self._key = None
        self._val = None

    def __call__(self, x, y, order=T.DEFAULT_ORDER):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        key = (order, x.shape, y.shape, x.tobytes(), y.tobytes())
        if key != self._key:
            self._val = self.field(x, y, order)
            self._key = key
        return self._val


def zero_field():
    return ScalarField(lambda X, Y: 0.0, "0")


def sanitize(jet: Jet2):
    """Replace non-finite coefficients by zero.

    Returns the cleaned jet and the list of dropped coefficients: ``(m, n)``
    pairs for a single base point, ``(m, n, k)`` entries (k the flat batch
    index) for a batch.
    """
    bad = ~np.isfinite(jet.c)
    if not bad.any():
        return jet, []
    c = np.where(bad, 0.0, jet.c)
    dropped = []
    if jet.c.ndim == 2:
        dropped = [(int(m), int(n)) for m, n in zip(*np.nonzero(bad)) if m + n <= jet.order]
    else:
        flat = bad.reshape(bad.shape[:2] + (-1,))
        for m, n, k in zip(*np.nonzero(flat)):
            if m + n <= jet.order:
                dropped.append((int(m), int(n), int(k)))
    return Jet2(c, jet.order), dropped


@dataclass
class StokesProblem:
    """Stokes data in one of two modes.

    ``mode == "manufactured"``: ``u = (u1, u2)`` and ``p`` given; ``phi``
    defaults to ``-div u`` and ``g`` is ``u`` itself.
    ``mode == "direct"``: ``f``, ``phi`` and ``g`` given, no exact solution.
    """

    mode: str
    nu: float = 1.0
    u1: Optional[ScalarField] = None
    u2: Optional[ScalarField] = None
    p: Optional[ScalarField] = None
    f1: Optional[ScalarField] = None
    f2: Optional[ScalarField] = None
    phi_field: Optional[ScalarField] = None
    g1: Optional[ScalarField] = None
    g2: Optional[ScalarField] = None
    name: str = ""
    branch_note: str = ""

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("viscosity must be positive")
        if self.mode == "manufactured":
            if self.u1 is None or self.u2 is None:
                raise ValueError("manufactured mode needs both velocity components")
        elif self.mode == "direct":
            if None in (self.f1, self.f2, self.g1, self.g2):
                raise ValueError("direct mode needs f and g")
            if self.phi_field is None:
                self.phi_field = zero_field()
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def manufactured(cls, u1, u2, p=None, nu=1.0, phi=None, name=""):
        return cls("manufactured", nu=nu, u1=u1, u2=u2, p=p, phi_field=phi, name=name)

    @classmethod
    def direct(cls, f1, f2, g1, g2, phi=None, nu=1.0, name=""):
        return cls("direct", nu=nu, f1=f1, f2=f2, g1=g1, g2=g2, phi_field=phi, name=name)

    def with_nu(self, nu):
        return StokesProblem(**{**self.__dict__, "nu": nu})

    def with_pressure(self, p):
        return StokesProblem(**{**self.__dict__, "p": p})

    @property
    def has_exact(self):
        return self.mode == "manufactured"

    # -- basic jets -------------------------------------------------------------
    def u(self, x, y, order):
        if not self.has_exact:
            raise NoExactSolution("direct-data problems carry no exact velocity")
        return self.u1(x, y, order), self.u2(x, y, order)

    def phi(self, x, y, order):
        if self.phi_field is not None:
            return self.phi_field(x, y, order)
        U1, U2 = self.u(x, y, order + 1)
        return -(U1.dx() + U2.dy())

    def g(self, r, x, y, order=0):
        if self.mode == "manufactured":
            return (self.u1 if r == 1 else self.u2)(x, y, order)
        return (self.g1 if r == 1 else self.g2)(x, y, order)

    def f(self, x, y, order=0):
        """Body force; synthesized as -nu Lap u + grad p in manufactured mode."""
        if self.mode == "direct":
            return self.f1(x, y, order), self.f2(x, y, order)
        if self.p is None:
            raise NoExactSolution("no pressure field given")
        U1, U2 = self.u(x, y, order + 2)
        P = self.p(x, y, order + 1)
        return -self.nu * U1.laplacian() + P.dx(), -self.nu * U2.laplacian() + P.dy()

    # -- derived sources ----------------------------------------------------------
    def psi(self, x, y, order=4):
        """Jets of (psi1, psi2) with ``-Lap^2 u = psi``."""
        Phi = self.phi(x, y, order + 3)
        lap_grad_phi = (Phi.dx().laplacian(), Phi.dy().laplacian())
        if self.mode == "manufactured":
            U1, U2 = self.u(x, y, order + 4)
            L1, L2 = U1.laplacian(), U2.laplacian()
            div_lap = L1.dx() + L2.dy()
            return (
                lap_grad_phi[0] - L1.laplacian() + div_lap.dx(),
                lap_grad_phi[1] - L2.laplacian() + div_lap.dy(),
            )
        F1, F2 = self.f(x, y, order + 2)
        div_f = F1.dx() + F2.dy()
        return (
            lap_grad_phi[0] + (F1.laplacian() - div_f.dx()) / self.nu,
            lap_grad_phi[1] + (F2.laplacian() - div_f.dy()) / self.nu,
        )

    def vorticity_term(self, x, y, order):
        """``nu^-1 (f1_y - f2_x)``, equal to ``Lap(u2_x - u1_y)`` for manufactured data."""
        if self.mode == "manufactured":
            U1, U2 = self.u(x, y, order + 3)
            return (U2.dx() - U1.dy()).laplacian()
        F1, F2 = self.f(x, y, order + 1)
        return (F1.dy() - F2.dx()) / self.nu

    def varphi(self, edge_kind, r, x, y, order=5):
        """Third-order boundary function of component ``r`` on an X- or Y-edge."""
        Phi = self.phi(x, y, order + 2)
        if edge_kind == "x":
            if r == 1:
                G2 = self.g(2, x, y, order + 3)
                return -Phi.diff(0, 2) - G2.diff(0, 3)
            G1 = self.g(1, x, y, order + 3)
            return self.vorticity_term(x, y, order) - Phi.diff(1, 1) + G1.diff(0, 3)
        if edge_kind == "y":
            if r == 1:
                G2 = self.g(2, x, y, order + 3)
                return -self.vorticity_term(x, y, order) - Phi.diff(1, 1) + G2.diff(3, 0)
            G1 = self.g(1, x, y, order + 3)
            return -Phi.diff(2, 0) - G1.diff(3, 0)
        raise ValueError(f"edge kind must be 'x' or 'y', not {edge_kind!r}")

    # -- exact quantities ---------------------------------------------------------
    def exact_velocity(self, r, x, y):
        if not self.has_exact:
            raise NoExactSolution("direct-data problems carry no exact velocity")
        return (self.u1 if r == 1 else self.u2).values(x, y)

    def exact_grad_p(self, x, y):
        if self.p is None:
            raise NoExactSolution("no pressure field given")
        P = self.p(x, y, 1)
        return P.partial(1, 0), P.partial(0, 1)


# ---------------------------------------------------------------------------
# the three numerical experiments

def example1(nu=1.0):
    u1 = ScalarField(lambda X, Y: T.cos(3 * X - 3 * Y) * T.exp(Y), "cos(3x-3y) e^y")
    u2 = ScalarField(lambda X, Y: T.exp(X) * T.sin(3 * X) * T.cos(3 * Y), "e^x sin(3x) cos(3y)")
    p = ScalarField(lambda X, Y: T.sin(X - 3 * Y), "sin(x-3y)")
    return StokesProblem.manufactured(u1, u2, p, nu=nu, name="example1")


PRESSURE_VARIANTS = ("exp", "exp-large", "log")


def example2_pressure(variant="exp", lam=None):
    if variant in ("exp", "exp-large"):
        if lam is None:
            lam = 1.0 if variant == "exp" else 1e10
        return ScalarField(lambda X, Y: lam * T.exp(X / 2 + 3 * Y), f"{lam:g} exp(x/2+3y)")
    if variant == "log":
        return ScalarField(
            lambda X, Y: T.log(X) / (X * X - 1) * T.log(Y) / (Y * Y - 1), "ln(x)/(x^2-1) ln(y)/(y^2-1)"
        )
    raise ValueError(f"unknown pressure variant {variant!r}; choose from {PRESSURE_VARIANTS}")


def example2(lam=None, p_variant="exp", nu=1.0):
    u1 = ScalarField(lambda X, Y: -T.cos(4 * X) * T.sin(6 * Y), "-cos(4x) sin(6y)")
    u2 = ScalarField(lambda X, Y: T.sin(4 * X) * T.cos(6 * Y), "sin(4x) cos(6y)")
    return StokesProblem.manufactured(u1, u2, example2_pressure(p_variant, lam), nu=nu, name="example2")


EX3_Z = 1.54
EX3_OMEGA = 1.5 * np.pi


def example3_stream(z=EX3_Z, omega=EX3_OMEGA):
    """Stream function with the corner singularity of the L-shaped domain."""
    a = np.sin((z - 1) * omega) / (z - 1) - np.sin((z + 1) * omega) / (z + 1)
    b = np.cos((z - 1) * omega) - np.cos((z + 1) * omega)

    def zeta(X, Y):
        th = T.atan2_branch(Y, X, omega)
        eta = a * (T.cos((z - 1) * th) - T.cos((z + 1) * th)) - b * (
            T.sin((z - 1) * th) / (z - 1) - T.sin((z + 1) * th) / (z + 1)
        )
        bubble = (X * X - 1) ** 2 * (Y * Y - 1) ** 2
        return bubble * T.power(X * X + Y * Y, (1 + z) / 2) * eta

    return ScalarField(zeta, "zeta")


def example3(nu=1.0, z=EX3_Z):
    zeta = CachedField(example3_stream(z))
    u1 = zeta.derivative(0, 1, "zeta_y")
    u2 = _neg(zeta.derivative(1, 0, "zeta_x"))
    p = ScalarField(lambda X, Y: T.exp(X + Y), "exp(x+y)")
    return StokesProblem.manufactured(u1, u2, p, nu=nu, phi=zero_field(), name="example3")


def _neg(field):
    return _DerivedField(lambda x, y, order: -field(x, y, order), "-" + field.name, field.max_order)
