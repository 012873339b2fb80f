"""Command-line front end.

Machine output is JSON on stdout; a short human summary goes to stderr.

Exit codes: 0 ok, 1 malformed input, 2 non-unitary gate, 3 infeasible
conversion.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np
from scipy.linalg import polar

from . import protocols, sim
from .choi import DEFAULT_RANK_TOL, choi_spectrum, schmidt_number
from .classify import class_of_rank
from .convert import quote
from .errors import (
    GateconvError,
    ImpossibleRankError,
    InfeasibleConversionError,
    InputError,
    NonUnitaryError,
)
from .gates import Gate, canonical_decompose, gate_digest, gate_from_json, interaction_coefficients, named_gate

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_NON_UNITARY = 2
EXIT_INFEASIBLE = 3

CLI_UNITARY_TOL = 1e-8
RANK_TOL_ENV = "GATECONV_RANK_TOL"
SCHEMA_VERSION = "v1"

_ANGLE_RE = re.compile(r"^(?:(?P<num>[-+]?[0-9.eE+-]+)\s*\*?\s*)?(?P<pi>pi)(?:\s*/\s*(?P<den>[0-9.eE+-]+))?$")


def _parse_angle(text: str) -> float:
    """A float, or ``pi``, ``pi/8``, ``3*pi/16``, ``-pi/4``."""
    text = text.strip().lower()
    try:
        return float(text)
    except ValueError:
        pass
    sign = 1.0
    if text.startswith("-"):
        sign, text = -1.0, text[1:].strip()
    m = _ANGLE_RE.match(text)
    if not m:
        raise InputError(f"cannot parse angle {text!r}")
    try:
        num = float(m["num"]) if m["num"] else 1.0
        den = float(m["den"]) if m["den"] else 1.0
    except ValueError:
        raise InputError(f"cannot parse angle {text!r}") from None
    if den == 0:
        raise InputError("angle has zero denominator")
    return sign * num * math.pi / den


def parse_gate_source(spec: str) -> Gate:
    """Parse ``name=...``, ``mu=a,b,c``, ``file=path`` or ``json=...``."""
    key, sep, value = spec.partition("=")
    if not sep:
        raise InputError(f"gate source must look like name=..., mu=..., file=... or json=...; got {spec!r}")
    key = key.strip().lower()
    if key == "name":
        return named_gate(value.strip())
    if key == "mu":
        parts = [p for p in value.strip().strip("[]").split(",") if p.strip()]
        if len(parts) != 3:
            raise InputError("mu needs three comma-separated angles")
        return gate_from_json({"canonical": {"mu": [_parse_angle(p) for p in parts]}})
    if key == "json":
        return gate_from_json(value)
    if key == "file":
        try:
            text = Path(value).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {value}: {exc.strerror}") from None
        return gate_from_json(text)
    raise InputError(f"unknown gate source {key!r}")


def _nearest_unitary(g: Gate) -> Gate:
    """Check unitarity at the CLI tolerance, then replace the matrix by its unitary polar factor.

    Hand-typed matrices are often unitary only to 1e-9 or so; the library
    kernels expect 1e-10.
    """
    g.check_unitary(CLI_UNITARY_TOL)
    u, _ = polar(np.asarray(g.matrix))
    return Gate(g.d, u, g.name)


def _load_gate(spec: str) -> Gate:
    return _nearest_unitary(parse_gate_source(spec))


def _rank_tol(args) -> float:
    if args.rank_tol is not None:
        return args.rank_tol
    env = os.environ.get(RANK_TOL_ENV)
    if env:
        try:
            tol = float(env)
        except ValueError:
            raise InputError(f"{RANK_TOL_ENV}={env!r} is not a number") from None
        if not 0 < tol < 1:
            raise InputError(f"{RANK_TOL_ENV} must lie in (0, 1)")
        return tol
    return DEFAULT_RANK_TOL


def _pairs(z) -> list[list[float]]:
    return [[_real(c.real), _real(c.imag)] for c in np.asarray(z).reshape(-1)]


def load_schema(name: str) -> dict:
    """Bundled JSON schema, e.g. ``load_schema("analyze")``."""
    path = importlib.resources.files("gateconv") / "schemas" / f"{name}.{SCHEMA_VERSION}.json"
    return json.loads(path.read_text())


def _real(x) -> float:
    return float(x) + 0.0  # no "-0.0" in the output


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=False, allow_nan=False)


def _quote_field(g: Gate, target: str, rank_tol: float):
    q = quote(g, target, rank_tol)
    return q.probability if q.feasible else {"feasible": False}


# ---------------------------------------------------------------------------
# commands


def analyze_report(g: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> dict:
    spec = choi_spectrum(g)
    n = schmidt_number(spec, rank_tol)
    cls = class_of_rank(n, g.d, spec.amplitudes)
    report = {
        "schema": f"analyze.{SCHEMA_VERSION}",
        "input": gate_digest(g),
        "d": g.d,
        "mu": None,
        "global_phase": None,
        "interaction_coefficients": None,
        "choi_spectrum": [_real(x) for x in spec.amplitudes],
        "schmidt_number": n,
        "class": cls.label,
        "quote_cnot": None,
        "quote_swap": None,
    }
    if g.d == 2:
        cf = canonical_decompose(g)
        report["mu"] = [_real(x) for x in cf.mu]
        report["global_phase"] = _real(cf.global_phase)
        report["interaction_coefficients"] = _pairs(interaction_coefficients(cf.mu))
        report["quote_cnot"] = _quote_field(g, "cnot", rank_tol)
        report["quote_swap"] = _quote_field(g, "swap", rank_tol)
        uncapped = quote(g, "cnot", rank_tol).uncapped_probability
        if uncapped is not None and n == 4:
            report["quote_cnot_uncapped"] = uncapped
    return report


def cmd_analyze(args) -> int:
    tol = _rank_tol(args)
    g = _load_gate(args.gate)
    report = analyze_report(g, tol)
    print(_dump(report))
    mu = report["mu"]
    mu_text = "n/a" if mu is None else "(" + ", ".join(f"{x:.6f}" for x in mu) + ")"
    print(f"{report['input']}: mu={mu_text} schmidt_number={report['schmidt_number']} class={report['class']}",
          file=sys.stderr)
    return EXIT_OK


def convert_report(g: Gate, target: str, mode: str, samples: int, seed: int,
                   rank_tol: float = DEFAULT_RANK_TOL) -> dict:
    inputs = protocols.verification_inputs(n_random=4, seed=seed)
    rep = protocols.run_on_inputs(lambda s: protocols.convert_gate(g, target, s, rank_tol), inputs)
    q = quote(g, target, rank_tol)
    out = {
        "schema": f"convert.{SCHEMA_VERSION}",
        "input": gate_digest(g),
        "mode": mode,
        "quote": q.to_json(),
        "success_probability": rep.success_probability_exact,
        "verified": rep.verified,
        "test_inputs": len(rep.test_inputs),
        "classical_bits_sent": rep.classical_bits_sent,
        "gate_uses": rep.gate_uses,
        "pruned_mass": rep.pruned_mass,
    }
    body = rep.to_json()
    out["target"] = body["target"]
    out["branches"] = body["branches"]
    if mode == "sample":
        res = sim.sample_run(rep, seed, samples)
        out["sample"] = res.to_json()
        out["sample"]["sigma"] = _sigma(res.exact_success, samples)
    return out


def _sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def cmd_convert(args) -> int:
    tol = _rank_tol(args)
    g = _load_gate(args.gate)
    if args.samples < 1:
        raise InputError("--samples must be positive")
    report = convert_report(g, args.target, args.mode, args.samples, args.seed, tol)
    print(_dump(report))
    msg = f"{report['input']} -> {args.target.upper()}: p={report['success_probability']:.12g} verified={report['verified']}"
    if args.mode == "sample":
        msg += f" sampled={report['sample']['success_frequency']:.6f} (n={args.samples})"
    print(msg, file=sys.stderr)
    return EXIT_OK


def classify_line(line: str, rank_tol: float) -> dict:
    g = _nearest_unitary(gate_from_json(line))
    spec = choi_spectrum(g)
    n = schmidt_number(spec, rank_tol)
    return {"digest": gate_digest(g), "schmidt_number": n, "class": class_of_rank(n, g.d, spec.amplitudes).label}


def cmd_classify_batch(args) -> int:
    tol = _rank_tol(args)
    try:
        text = Path(args.path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.path}: {exc.strerror}") from None
    failures = 0
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for lineno, line in enumerate(lines, 1):
        try:
            rec = classify_line(line, tol)
        except (GateconvError, ValueError) as exc:
            failures += 1
            rec = {"line": lineno, "error": str(exc)}
        print(_dump(rec))
    print(f"classified {len(lines) - failures} of {len(lines)} gates", file=sys.stderr)
    return EXIT_OK if failures == 0 else EXIT_MALFORMED


# ---------------------------------------------------------------------------
# entry point


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("rank tolerance must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gateconv", description="Classify two-qubit gates and convert them to CNOT or SWAP.")
    p.add_argument("--rank-tol", type=_positive_float, default=None,
                   help=f"relative Schmidt rank tolerance (default ${RANK_TOL_ENV} or {DEFAULT_RANK_TOL})")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="canonical form, Choi spectrum, class and conversion quotes")
    a.add_argument("gate", help="name=cnot | mu=pi/8,0,0 | file=gate.json | json='{...}'")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("convert", help="run the optimal conversion protocol")
    c.add_argument("gate")
    c.add_argument("--target", choices=("cnot", "swap"), required=True)
    c.add_argument("--mode", choices=("exact", "sample"), default="exact")
    c.add_argument("--samples", type=int, default=100000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_convert)

    b = sub.add_parser("classify-batch", help="classify a JSON-lines file of gates")
    b.add_argument("path")
    b.set_defaults(func=cmd_classify_batch)
    return p


def _fail(code: int, message: str, **extra) -> int:
    print(_dump({"error": message, "exit_code": code, **extra}))
    print(f"error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_MALFORMED if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NonUnitaryError as exc:
        return _fail(EXIT_NON_UNITARY, str(exc), residual=exc.residual)
    except InfeasibleConversionError as exc:
        return _fail(EXIT_INFEASIBLE, str(exc), source_schmidt_number=exc.source_rank,
                     target_schmidt_number=exc.target_rank)
    except (InputError, ImpossibleRankError) as exc:
        return _fail(EXIT_MALFORMED, str(exc))


if __name__ == "__main__":
    sys.exit(main())
