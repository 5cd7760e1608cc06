"""Scenario files and the built-in examples.

Scenario files are TOML with the sections ``[meta]``, ``[plant]``,
``[reference]``, ``[constraints]``, ``[bounds]``, ``[disturbance]``,
``[simulation]`` and ``[noise]``. Envelopes are inline tables tagged by
``kind``. Reals are written with 17 significant digits so files round-trip
bit-exactly.
"""
import math

import numpy as np
import tomli

from .envelopes import PPF, ConstraintSet, Constant, Exponential, Sinusoid, Window, envelope_from_dict
from .errors import ParseError, ValidationError
from .simulation import NoiseSpec, Scenario

SCHEMA = {
    "meta": ({"name", "notes"}, set()),
    "plant": ({"A", "B"}, {"A", "B"}),
    "reference": ({"A_r", "B_r", "r"}, {"A_r", "B_r", "r"}),
    "constraints": ({"phi_x", "phi_e", "phi_u", "chi_r"}, {"phi_u", "chi_r"}),
    "bounds": ({"k_bar_x", "k_bar_r", "r_bar", "d_bar"}, {"k_bar_x", "k_bar_r", "r_bar"}),
    "disturbance": ({"d"}, {"d"}),
    "simulation": (
        {"x0", "xr0", "k_hat_x0", "T", "dt", "Q", "gamma_x", "proj_epsilon", "denom_floor", "clamp_derivative"},
        {"T", "dt", "Q", "gamma_x"},
    ),
    "noise": ({"sigma2", "seed", "window"}, {"sigma2"}),
}
REQUIRED_SECTIONS = ("plant", "reference", "constraints", "bounds", "simulation")


# -- built-ins ---------------------------------------------------------------

def example1():
    """Lateral bicycle dynamics at low speed with a sinusoidal reference."""
    constraints = ConstraintSet.from_error_envelope(
        phi_e=PPF(0.8, 0.05, 1.2, 1.0),
        phi_u=PPF(5.0, 1.7, 1.0, 1.0),
        chi_r=Constant(0.85),
    )
    return Scenario(
        name="example1",
        A=[[0.0, 1.0], [2.0, 1.5]],
        B=[[0.0], [1.0]],
        A_r=[[0.0, 1.0], [-1.0, -2.0]],
        B_r=[[0.0], [1.0]],
        Q=np.eye(2),
        r=(Sinusoid(1.0, 0.5),),
        constraints=constraints,
        k_bar_x=5.0,
        k_bar_r=1.2,
        r_bar=1.0,
        T=20.0,
        dt=1e-3,
        gamma_x=[[5.0]],
        notes=(
            "k_bar_x, k_bar_r, r_bar and chi_r are design choices with margin over the matched gains",
        ),
    )


def _example2_base(phi_u, d, d_bar, name, noise=None):
    constraints = ConstraintSet.from_error_envelope(
        phi_e=PPF(0.5, 0.08, 1.2, 1.0),
        phi_u=phi_u,
        chi_r=Constant(0.02),
    )
    return Scenario(
        name=name,
        A=[[-3.0, 1.5, 0.0, 0.0], [0.0, -3.0, 1.5, 0.0], [0.0, 0.0, -3.0, -1.5], [0.0, 0.0, 0.0, 3.0]],
        B=[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [3.0, 1.0]],
        A_r=[[-2.0, -1.0, 0.0, 0.0], [0.0, -2.0, -1.0, 0.0], [0.0, 0.0, -2.0, -1.0], [0.0, 0.0, 0.0, -2.0]],
        B_r=[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0]],
        Q=0.1 * np.eye(4),
        r=(Exponential(0.02, -0.2, 0.0), Exponential(0.02, -1.0, 0.0)),
        constraints=constraints,
        k_bar_x=10.0,
        k_bar_r=2.5,
        r_bar=0.03,
        d=d,
        d_bar=d_bar,
        T=15.0,
        dt=1e-3,
        gamma_x=2.0 * np.eye(2),
        noise=noise,
        notes=(
            "gamma_x = 2 I; the indefinite [[0, 2], [2, 0]] is not an admissible adaptation gain",
            "A, A_r, B violate the state matching condition; residual_A > 0 acts as an unmatched term",
        ),
    )


def example2():
    """Unstable 4-state, 2-input plant with a bounded disturbance on [5, 10]."""
    d = tuple(
        Window(inner, 5.0, 10.0)
        for inner in (
            Sinusoid(0.5, 10.0),
            Sinusoid(0.5, 10.0, phase=math.pi / 2),
            Sinusoid(0.5, 5.0),
            Constant(1.0),
        )
    )
    return _example2_base(PPF(2.0, 0.5, 4.0, 2.0), d, 0.5 * math.sqrt(7.0), "example2")


def example2_noise():
    """Example 2 without disturbance, tightened input envelope, noisy measurements."""
    return _example2_base(
        PPF(1.5, 0.2, 4.0, 2.0), None, 0.0, "example2_noise", noise=NoiseSpec(sigma2=0.05, seed=7)
    )


BUILTINS = {"example1": example1, "example2": example2, "example2_noise": example2_noise}


# -- serialization -----------------------------------------------------------

def _mat(a):
    return np.asarray(a, dtype=float).tolist()


def _env(e):
    return e.to_dict()


def scenario_to_dict(sc):
    c = sc.constraints
    cons = {"phi_u": _env(c.phi_u), "chi_r": _env(c.chi_r)}
    if c.given == "phi_x":
        cons["phi_x"] = _env(c.phi_x)
    else:
        cons["phi_e"] = _env(c.phi_e)
    doc = {
        "meta": {"name": sc.name, "notes": list(sc.notes)},
        "plant": {"A": _mat(sc.A), "B": _mat(sc.B)},
        "reference": {"A_r": _mat(sc.A_r), "B_r": _mat(sc.B_r), "r": [_env(e) for e in sc.r]},
        "constraints": cons,
        "bounds": {
            "k_bar_x": float(sc.k_bar_x),
            "k_bar_r": float(sc.k_bar_r),
            "r_bar": float(sc.r_bar),
            "d_bar": float(sc.d_bar),
        },
        "disturbance": {"d": [_env(e) for e in sc.d]},
        "simulation": {
            "x0": _mat(sc.x0),
            "xr0": _mat(sc.xr0),
            "k_hat_x0": _mat(sc.k_hat_x0),
            "T": float(sc.T),
            "dt": float(sc.dt),
            "Q": _mat(sc.Q),
            "gamma_x": _mat(sc.gamma_x),
            "proj_epsilon": float(sc.proj_epsilon),
            "denom_floor": float(sc.denom_floor),
            "clamp_derivative": bool(sc.clamp_derivative),
        },
    }
    if sc.noise is not None:
        noise = {"sigma2": float(sc.noise.sigma2), "seed": int(sc.noise.seed)}
        if sc.noise.window is not None:
            noise["window"] = [float(w) for w in sc.noise.window]
        doc["noise"] = noise
    return doc


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{k} = {_fmt(x)}" for k, x in v.items()) + " }"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(sc):
    """Scenario as TOML text with reals at 17 significant digits."""
    out = []
    for section, body in scenario_to_dict(sc).items():
        out.append(f"[{section}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in body.items())
        out.append("")
    return "\n".join(out)


def _section(doc, name):
    body = doc.get(name, {})
    allowed, required = SCHEMA[name]
    if not isinstance(body, dict):
        raise ParseError(f"[{name}] must be a table")
    for key in body:
        if key not in allowed:
            raise ParseError(f"[{name}]: unknown key '{key}'")
    for key in sorted(required):
        if key not in body:
            raise ParseError(f"[{name}]: missing key '{key}'")
    return body


def _array(value, where, ndim):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a numeric array") from None
    if a.ndim != ndim:
        raise ValidationError(f"{where} dimension clash: expected a {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{where}: entries must be finite")
    return a


def _envelopes(items, where):
    if not isinstance(items, list):
        raise ParseError(f"{where}: expected a list of envelope literals")
    return tuple(envelope_from_dict(e, f"{where}[{i}]") for i, e in enumerate(items))


def scenario_from_dict(doc):
    """Build and validate a Scenario from a parsed document."""
    for key in doc:
        if key not in SCHEMA:
            raise ParseError(f"unknown section [{key}]")
    for key in REQUIRED_SECTIONS:
        if key not in doc:
            raise ParseError(f"missing section [{key}]")
    meta = _section(doc, "meta")
    plant = _section(doc, "plant")
    ref = _section(doc, "reference")
    cons = _section(doc, "constraints")
    bounds = _section(doc, "bounds")
    sim = _section(doc, "simulation")
    dist = _section(doc, "disturbance") if "disturbance" in doc else None
    noise = _section(doc, "noise") if "noise" in doc else None

    if ("phi_x" in cons) == ("phi_e" in cons):
        raise ParseError("[constraints]: give exactly one of 'phi_x' or 'phi_e'")
    phi_u = envelope_from_dict(cons["phi_u"], "[constraints].phi_u")
    chi_r = envelope_from_dict(cons["chi_r"], "[constraints].chi_r")
    if "phi_e" in cons:
        constraints = ConstraintSet.from_error_envelope(envelope_from_dict(cons["phi_e"], "[constraints].phi_e"),
                                                        phi_u, chi_r)
    else:
        constraints = ConstraintSet.from_state_envelope(envelope_from_dict(cons["phi_x"], "[constraints].phi_x"),
                                                        phi_u, chi_r)
    B = _array(plant["B"], "[plant].B", 2)
    opt = {}
    for key, nd in (("x0", 1), ("xr0", 1), ("k_hat_x0", 2)):
        if key in sim:
            opt[key] = _array(sim[key], f"[simulation].{key}", nd)
    for key in ("proj_epsilon", "denom_floor"):
        if key in sim:
            opt[key] = float(sim[key])
    if "clamp_derivative" in sim:
        opt["clamp_derivative"] = bool(sim["clamp_derivative"])
    if noise is not None:
        window = noise.get("window")
        if window is not None and len(window) != 2:
            raise ValidationError("[noise].window must be [t_a, t_b]")
        opt["noise"] = NoiseSpec(float(noise["sigma2"]), int(noise.get("seed", 0)),
                                 None if window is None else (float(window[0]), float(window[1])))
    try:
        sc = Scenario(
            name=str(meta.get("name", "scenario")),
            notes=tuple(str(s) for s in meta.get("notes", ())),
            A=_array(plant["A"], "[plant].A", 2),
            B=B,
            A_r=_array(ref["A_r"], "[reference].A_r", 2),
            B_r=_array(ref["B_r"], "[reference].B_r", 2),
            r=_envelopes(ref["r"], "[reference].r"),
            d=_envelopes(dist["d"], "[disturbance].d") if dist is not None else None,
            constraints=constraints,
            k_bar_x=float(bounds["k_bar_x"]),
            k_bar_r=float(bounds["k_bar_r"]),
            r_bar=float(bounds["r_bar"]),
            d_bar=float(bounds.get("d_bar", 0.0)),
            Q=_array(sim["Q"], "[simulation].Q", 2),
            gamma_x=_array(sim["gamma_x"], "[simulation].gamma_x", 2),
            T=float(sim["T"]),
            dt=float(sim["dt"]),
            **opt,
        )
    except ValueError as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(str(exc)) from None
    return sc.validate()


def loads(text):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from None
    return scenario_from_dict(doc)


def load_scenario(source):
    """Load a built-in by name or a scenario file by path; always validated."""
    if source in BUILTINS:
        return BUILTINS[source]().validate()
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario '{source}': {exc.strerror}") from None
    return loads(text)
