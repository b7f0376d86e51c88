"""Polynomial systems to Leontief exchange markets, with exact verification.

Thin dict-in/dict-out layer over the C++ extension. Rationals are strings
such as "3/7".
"""

import json as _json

from . import _polyleon
from ._polyleon import PolyleonError

__all__ = [
    "PolyleonError",
    "reduce",
    "compile",
    "lift",
    "verify",
    "project",
    "audit_ok",
    "encode_ne",
    "export_etr",
    "solve_poly_grid",
    "run_cli",
]


def _text(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def reduce(system):
    return _json.loads(_polyleon.reduce(_text(system)))


def compile(system):
    """Returns (market, trace) for a polynomial or homogenized relation system."""
    market, trace = _polyleon.compile(_text(system))
    return _json.loads(market), _json.loads(trace)


def lift(trace, z):
    return _json.loads(_polyleon.lift(_text(trace), [str(v) for v in z]))


def verify(market, certificate, mode="exact", eps="1e-9"):
    return _json.loads(_polyleon.verify(_text(market), _text(certificate), mode, str(eps)))


def project(trace, certificate):
    return _polyleon.project(_text(trace), _text(certificate))


def audit_ok(trace, certificate):
    return _polyleon.audit_ok(_text(trace), _text(certificate))


def encode_ne(game, decision=False):
    return _json.loads(_polyleon.encode_ne(_text(game), decision))


def export_etr(market):
    return _polyleon.export_etr(_text(market))


def solve_poly_grid(system, resolution=64, eps=1e-6):
    return _polyleon.solve_poly_grid(_text(system), resolution, eps)


def run_cli(args):
    return _polyleon.run_cli([str(a) for a in args])
