"""Time-varying bound functions with closed-form values and derivatives.

Every envelope evaluates on scalars or numpy arrays of times. Derivatives are
analytic; nothing in the controller path differentiates numerically.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DerivativeSingularity, NonPositiveEnvelope, ParseError, ThresholdOutOfRange

# Derivative clamp for PPFs with shape nu < 1, whose slope is unbounded at t = 0.
T_FLOOR = 1e-6


class Envelope:
    """Base class. Subclasses implement ``value`` and ``derivative``."""

    kind = None

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t, clamp=False):
        raise NotImplementedError

    def __call__(self, t):
        return self.value(t)

    def evaluate(self, t, clamp=False):
        return self.value(t), self.derivative(t, clamp=clamp)

    def to_dict(self):
        raise NotImplementedError


def _t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("envelopes are defined for t >= 0")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class Constant(Envelope):
    c: float
    kind = "const"

    def value(self, t):
        t = _t(t)
        return _out(np.full(t.shape, float(self.c)))

    def derivative(self, t, clamp=False):
        t = _t(t)
        return _out(np.zeros(t.shape))

    def to_dict(self):
        return {"kind": "const", "c": float(self.c)}


@dataclass(frozen=True)
class PerformanceFunction(Envelope):
    """Generalized performance function

        phi(t) = (phi0 - phi_inf) / (1 + kappa t^nu) + phi_inf

    decreasing from ``phi0`` at t = 0 towards ``phi_inf``.
    """

    phi0: float
    phi_inf: float
    kappa: float
    nu: float
    kind = "ppf"

    def __post_init__(self):
        if not (self.phi0 > self.phi_inf > 0):
            raise ValueError("PerformanceFunction requires phi0 > phi_inf > 0")
        if not (self.kappa > 0 and self.nu > 0):
            raise ValueError("PerformanceFunction requires kappa > 0 and nu > 0")

    def value(self, t):
        t = _t(t)
        return _out((self.phi0 - self.phi_inf) / (1.0 + self.kappa * t**self.nu) + self.phi_inf)

    def derivative(self, t, clamp=False):
        t = _t(t)
        if self.nu < 1.0:
            if clamp:
                t = np.maximum(t, T_FLOOR)
            elif np.any(t < T_FLOOR):
                raise DerivativeSingularity(
                    f"PPF with nu={self.nu} < 1 has an unbounded derivative near t=0; "
                    "enable derivative clamping to evaluate it"
                )
        # t**(nu-1) at t=0: 0**0 = 1 for nu = 1 and 0 for nu > 1, both correct limits
        with np.errstate(divide="ignore"):
            tp = np.where(t > 0, t ** (self.nu - 1.0), 1.0 if self.nu == 1.0 else 0.0)
        denom = (1.0 + self.kappa * t**self.nu) ** 2
        return _out(-(self.phi0 - self.phi_inf) * self.kappa * self.nu * tp / denom)

    def to_dict(self):
        return {
            "kind": "ppf",
            "phi0": float(self.phi0),
            "phi_inf": float(self.phi_inf),
            "kappa": float(self.kappa),
            "nu": float(self.nu),
        }


@dataclass(frozen=True)
class Exponential(Envelope):
    """``a * exp(b t) + c``."""

    a: float
    b: float
    c: float
    kind = "exp"

    def value(self, t):
        t = _t(t)
        return _out(self.a * np.exp(self.b * t) + self.c)

    def derivative(self, t, clamp=False):
        t = _t(t)
        return _out(self.a * self.b * np.exp(self.b * t))

    def to_dict(self):
        return {"kind": "exp", "a": float(self.a), "b": float(self.b), "c": float(self.c)}


@dataclass(frozen=True)
class Sinusoid(Envelope):
    """``a * sin(omega t + phase) + offset``."""

    a: float
    omega: float
    phase: float = 0.0
    offset: float = 0.0
    kind = "sin"

    def value(self, t):
        t = _t(t)
        return _out(self.a * np.sin(self.omega * t + self.phase) + self.offset)

    def derivative(self, t, clamp=False):
        t = _t(t)
        return _out(self.a * self.omega * np.cos(self.omega * t + self.phase))

    def to_dict(self):
        return {
            "kind": "sin",
            "a": float(self.a),
            "omega": float(self.omega),
            "phase": float(self.phase),
            "offset": float(self.offset),
        }


@dataclass(frozen=True)
class Window(Envelope):
    """``inner(t)`` on the closed interval ``[t_on, t_off]``, zero elsewhere.

    At the switch instants the derivative is that of the active branch.
    """

    inner: Envelope
    t_on: float
    t_off: float
    kind = "window"

    def __post_init__(self):
        if not self.t_off >= self.t_on:
            raise ValueError("Window requires t_off >= t_on")

    def _mask(self, t):
        return (t >= self.t_on) & (t <= self.t_off)

    def value(self, t):
        t = _t(t)
        return _out(np.where(self._mask(t), self.inner.value(t), 0.0))

    def derivative(self, t, clamp=False):
        t = _t(t)
        mask = self._mask(t)
        if t.ndim == 0:
            return float(self.inner.derivative(t, clamp=clamp)) if mask else 0.0
        out = np.zeros(t.shape)
        if np.any(mask):
            out[mask] = self.inner.derivative(t[mask], clamp=clamp)
        return out

    def to_dict(self):
        return {"kind": "window", "inner": self.inner.to_dict(), "t_on": float(self.t_on), "t_off": float(self.t_off)}


@dataclass(frozen=True)
class Sum(Envelope):
    terms: Tuple[Envelope, ...]
    kind = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("Sum needs at least one term")

    def value(self, t):
        t = _t(t)
        return _out(sum(np.asarray(e.value(t)) for e in self.terms))

    def derivative(self, t, clamp=False):
        t = _t(t)
        return _out(sum(np.asarray(e.derivative(t, clamp=clamp)) for e in self.terms))

    def to_dict(self):
        return {"kind": "sum", "terms": [e.to_dict() for e in self.terms]}


@dataclass(frozen=True)
class Difference(Envelope):
    """Pointwise ``minuend - subtrahend``; used for the derived error envelope."""

    minuend: Envelope
    subtrahend: Envelope
    kind = "difference"

    def value(self, t):
        t = _t(t)
        return _out(np.asarray(self.minuend.value(t)) - np.asarray(self.subtrahend.value(t)))

    def derivative(self, t, clamp=False):
        t = _t(t)
        return _out(
            np.asarray(self.minuend.derivative(t, clamp=clamp))
            - np.asarray(self.subtrahend.derivative(t, clamp=clamp))
        )

    def to_dict(self):
        raise TypeError("difference envelopes are derived and have no file literal")


PPF = PerformanceFunction


def eval_envelope(env, t, clamp=False):
    """Return ``(value, derivative)`` of ``env`` at ``t``."""
    return env.evaluate(t, clamp=clamp)


def convergence_time(pf, epsilon):
    """Time at which the performance function ``pf`` reaches ``epsilon``.

    Requires ``pf.phi_inf < epsilon < pf.phi0``.
    """
    if not (pf.phi_inf < epsilon < pf.phi0):
        raise ThresholdOutOfRange(
            f"epsilon={epsilon} must lie strictly between phi_inf={pf.phi_inf} and phi0={pf.phi0}"
        )
    ratio = (pf.phi0 - pf.phi_inf) / (epsilon - pf.phi_inf)
    return ((ratio - 1.0) / pf.kappa) ** (1.0 / pf.nu)


def derive_error_envelope(phi_x, chi_r, grid):
    """Error envelope ``phi_e = phi_x - chi_r``, validated positive on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-empty and strictly increasing")
    phi_e = Difference(phi_x, chi_r)
    check_positive(phi_e, grid, "phi_e")
    return phi_e


def check_positive(env, grid, name="envelope"):
    vals = np.asarray(env.value(grid))
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size:
        t_bad = float(np.asarray(grid)[bad[0]])
        raise NonPositiveEnvelope(f"{name} is not positive at t={t_bad:g}", t=t_bad)


_KINDS = {
    "const": (Constant, ("c",)),
    "ppf": (PerformanceFunction, ("phi0", "phi_inf", "kappa", "nu")),
    "exp": (Exponential, ("a", "b", "c")),
    "sin": (Sinusoid, ("a", "omega", "phase", "offset")),
}


def envelope_from_dict(d, where="envelope"):
    """Build an envelope from its tagged-record literal."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ParseError(f"{where}: envelope literal needs a 'kind' field")
    kind = d["kind"]
    keys = set(d) - {"kind"}
    if kind in _KINDS:
        cls, fields = _KINDS[kind]
        required = set(fields) - ({"phase", "offset"} if kind == "sin" else set())
        unknown = keys - set(fields)
        if unknown:
            raise ParseError(f"{where}: unknown key '{sorted(unknown)[0]}' for kind '{kind}'")
        missing = required - keys
        if missing:
            raise ParseError(f"{where}: missing key '{sorted(missing)[0]}' for kind '{kind}'")
        try:
            return cls(**{k: float(d[k]) for k in keys})
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: {exc}") from None
    if kind == "window":
        unknown = keys - {"inner", "t_on", "t_off"}
        if unknown:
            raise ParseError(f"{where}: unknown key '{sorted(unknown)[0]}' for kind 'window'")
        try:
            return Window(envelope_from_dict(d["inner"], where + ".inner"), float(d["t_on"]), float(d["t_off"]))
        except KeyError as exc:
            raise ParseError(f"{where}: missing key {exc} for kind 'window'") from None
    if kind == "sum":
        unknown = keys - {"terms"}
        if unknown:
            raise ParseError(f"{where}: unknown key '{sorted(unknown)[0]}' for kind 'sum'")
        terms = d.get("terms")
        if not terms:
            raise ParseError(f"{where}: 'sum' needs a non-empty 'terms' list")
        return Sum(tuple(envelope_from_dict(e, f"{where}.terms[{i}]") for i, e in enumerate(terms)))
    raise ParseError(f"{where}: unknown envelope kind '{kind}'")


@dataclass(frozen=True)
class ConstraintSet:
    """State bound, input bound, reference-state bound and the derived error
    bound ``phi_e = phi_x - chi_r``.

    ``given`` records which of ``phi_x``/``phi_e`` was specified by the user,
    so a scenario file round-trips.
    """

    phi_x: Envelope
    phi_u: Envelope
    chi_r: Envelope
    phi_e: Envelope
    given: str = "phi_e"

    @classmethod
    def from_error_envelope(cls, phi_e, phi_u, chi_r):
        return cls(phi_x=Sum((phi_e, chi_r)), phi_u=phi_u, chi_r=chi_r, phi_e=phi_e, given="phi_e")

    @classmethod
    def from_state_envelope(cls, phi_x, phi_u, chi_r, grid=None):
        if grid is None:
            phi_e = Difference(phi_x, chi_r)
        else:
            phi_e = derive_error_envelope(phi_x, chi_r, grid)
        return cls(phi_x=phi_x, phi_u=phi_u, chi_r=chi_r, phi_e=phi_e, given="phi_x")

    def validate(self, grid):
        check_positive(self.phi_e, grid, "phi_e")
        check_positive(self.phi_u, grid, "phi_u")
