"""JSON and CSV formats for systems, networks, certificates and run configs.

Floats are written with ``repr`` (shortest round-trip form), so a parse,
write, parse cycle reproduces every value bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import library
from .certify import Certificate
from .geometry import HPolyhedron, box_template, octagon_template
from .milp import SolverConfig
from .sysmodel import MaxoutLayer, MaxoutNet, PwaSystem, Region


class FormatError(Exception):
    pass


def _num(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _arr(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _num(a)
    return [_arr(r) for r in a]


def poly_to_json(P: HPolyhedron) -> dict:
    return {"A": _arr(P.A), "b": _arr(P.b)}


def poly_from_json(d) -> HPolyhedron:
    try:
        A = np.array(d["A"], dtype=float)
        b = np.array(d["b"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad polyhedron: {exc}") from exc
    if A.ndim != 2:
        raise FormatError("polyhedron matrix must be two-dimensional")
    return HPolyhedron(A, b)


def system_to_json(sys: PwaSystem) -> dict:
    return {
        "name": sys.name,
        "provenance": sys.provenance,
        "X": poly_to_json(sys.X),
        "U": poly_to_json(sys.U),
        "regions": [{"A": _arr(r.A), "B": _arr(r.B), "p": _arr(r.p),
                     "H": _arr(r.guard.A), "h": _arr(r.guard.b), "D": poly_to_json(r.dist)}
                    for r in sys.regions],
    }


def system_from_json(d) -> PwaSystem:
    try:
        regions = [Region(r["A"], r["B"], r["p"], HPolyhedron(np.array(r["H"], float), np.array(r["h"], float)),
                          poly_from_json(r["D"])) for r in d["regions"]]
        return PwaSystem(regions, poly_from_json(d["X"]), poly_from_json(d["U"]),
                         d.get("name", "pwa"), d.get("provenance"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad system file: {exc}") from exc


def network_to_json(net: MaxoutNet) -> dict:
    return {
        "layers": [{"W": _arr(l.W), "b": _arr(l.b), "p": l.channels} for l in net.layers],
        "W_out": _arr(net.W_out),
        "b_out": _arr(net.b_out),
    }


def network_from_json(d) -> MaxoutNet:
    try:
        layers = [MaxoutLayer(l["W"], l["b"], int(l["p"])) for l in d["layers"]]
        return MaxoutNet(layers, d["W_out"], d["b_out"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad network file: {exc}") from exc


def certificate_to_json(cert: Certificate) -> dict:
    def poly(P):
        return None if P is None else poly_to_json(P)

    return {
        "stability_verdict": cert.stability_verdict,
        "uub_verdict": cert.uub_verdict,
        "inputs_verified": cert.inputs_verified,
        "f_max": poly(cert.f_max),
        "f_max_iterations": cert.f_max_iterations,
        "r_min": poly(cert.r_min),
        "k_bar": cert.k_bar,
        "eps_bar": _num(cert.eps_bar),
        "alpha": _num(cert.alpha),
        "delta_max": _num(cert.delta_max),
        "config": cert.config,
        "f_sequence": [poly(P) for P in cert.f_sequence],
        "r_sequence": [poly(P) for P in cert.r_sequence],
        "rpi_supports": None if cert.rpi_supports is None else _arr(cert.rpi_supports),
        "termination_scaled": poly(cert.termination_scaled),
        "termination_image": poly(cert.termination_image),
        "support_log": cert.support_log,
        "notes": cert.notes,
    }


def certificate_from_json(d) -> Certificate:
    def poly(v):
        return None if v is None else poly_from_json(v)

    return Certificate(
        f_max=poly(d["f_max"]), f_max_iterations=d["f_max_iterations"], r_min=poly(d["r_min"]),
        k_bar=d["k_bar"], eps_bar=float(d["eps_bar"]), alpha=float(d["alpha"]),
        delta_max=float(d["delta_max"]), stability_verdict=d["stability_verdict"],
        uub_verdict=d["uub_verdict"], inputs_verified=d["inputs_verified"], config=d["config"],
        f_sequence=[poly(P) for P in d["f_sequence"]], r_sequence=[poly(P) for P in d["r_sequence"]],
        rpi_supports=None if d["rpi_supports"] is None else np.array(d["rpi_supports"], float),
        termination_scaled=poly(d["termination_scaled"]), termination_image=poly(d["termination_image"]),
        support_log=d.get("support_log", []), notes=d.get("notes", []))


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# built-in inputs, addressed as "builtin:<name>"
BUILTIN_SYSTEMS = {
    "scalar": library.scalar_system,
    "quadrant": library.quadrant_system,
}
BUILTIN_NETWORKS = {
    "zero": library.scalar_controller,
    "quadrant_lqr": library.quadrant_controller,
    "double_integrator_lqr": library.double_integrator_controller,
}


def load_system(ref) -> PwaSystem:
    ref = str(ref)
    if ref.startswith("builtin:"):
        try:
            return BUILTIN_SYSTEMS[ref[8:]]()
        except KeyError:
            raise FormatError(f"unknown built-in system {ref[8:]!r}") from None
    return system_from_json(load_json(ref))


def load_network(ref) -> MaxoutNet:
    ref = str(ref)
    if ref.startswith("builtin:"):
        try:
            return BUILTIN_NETWORKS[ref[8:]]()
        except KeyError:
            raise FormatError(f"unknown built-in network {ref[8:]!r}") from None
    return network_from_json(load_json(ref))


def load_poly(ref) -> HPolyhedron:
    return poly_from_json(load_json(ref))


def parse_template(spec, n: int):
    """'box', 'octagon', a JSON file of rows, or None for the default."""
    if spec is None:
        return None
    if isinstance(spec, str):
        if spec == "box":
            return box_template(n)
        if spec == "octagon":
            if n != 2:
                raise FormatError("the octagon template is two-dimensional")
            return octagon_template()
        return np.array(load_json(spec), dtype=float)
    return np.array(spec, dtype=float)


@dataclass
class RunConfig:
    system: str | None = None
    network: str | None = None
    data: str | None = None
    template: object = None
    eps_bar: float = 1e-3
    alpha_tol: float = 0.0
    solver: dict = field(default_factory=dict)
    max_iters: int = 200
    seed: int = 0
    output: str = "."

    def __post_init__(self):
        if not self.eps_bar > 0:
            raise FormatError("eps_bar must be positive")
        for ref in (self.system, self.network, self.data):
            if ref and not str(ref).startswith("builtin:") and not Path(ref).exists():
                raise FormatError(f"{ref} does not exist")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        d = load_json(path)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise FormatError(f"unknown config keys {sorted(unknown)}")
        # input paths are relative to the config file
        base = Path(path).parent
        for key in ("system", "network", "data"):
            ref = d.get(key)
            if ref and not ref.startswith("builtin:") and not Path(ref).is_absolute():
                d[key] = str(base / ref)
        return cls(**d)


def write_trajectory_csv(traj, path, n, m):
    header = ["k", *[f"x{i + 1}" for i in range(n)], *[f"u{i + 1}" for i in range(m)],
              *[f"d{i + 1}" for i in range(n)], "region"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in traj.rows():
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_sets_csv(sets, path):
    """One row per facet: set index, facet index, coefficients, right-hand side."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n = sets[0].dim if sets else 0
        w.writerow(["set", "facet", *[f"a{i + 1}" for i in range(n)], "b"])
        for s, P in enumerate(sets):
            for f, (row, b) in enumerate(zip(P.A, P.b)):
                w.writerow([s, f, *map(repr, map(float, row)), repr(float(b))])
