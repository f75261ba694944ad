"""Command-line entry point: ``dp-lab <command> [flags]``.

Exit status is 0 when every verification passes, 1 when any fails (records
are still written) and 2 for an invalid specification, reported as one JSON
line on stderr.  With ``--output PATH`` the records go to ``PATH`` and a
manifest to ``PATH.manifest.json``; otherwise records go to stdout and the
manifest to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (COMMANDS, ExperimentSpec, SpecError, build_spec, config_load, convert_value,
                     parse_function)
from .discreteness import atom_density_check, discreteness_certificate, verify_h_gamma
from .harness import lemma_equivalence_test
from .measure import DirichletParams
from .montecarlo import thread_count
from .rng import GENERATOR_FAMILY, RngStream
from .samplers import polya_urn, stick_breaking


class NonFiniteOutput(RuntimeError):
    """A NaN or infinity reached the output layer."""


def _check_finite(obj, path="record"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise NonFiniteOutput(f"non-finite value at {path}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _flatten(rec: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in rec.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, name + "."))
        elif isinstance(val, list) and all(not isinstance(v, (dict, list)) for v in val):
            out[name] = " ".join(repr(v) if isinstance(v, float) else str(v) for v in val)
        elif isinstance(val, list):
            out[name] = json.dumps(val)
        else:
            out[name] = repr(val) if isinstance(val, float) else val
    return out


def _records_csv(kind: str, records: list[dict]) -> str:
    rows = [_flatten(r) for r in records]
    cols: list[str] = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    buf = io.StringIO()
    buf.write(f"# dp-lab {kind} v1\n")
    writer = csv.DictWriter(buf, cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _records_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=False) + "\n" for r in records)


def _params(spec: ExperimentSpec) -> DirichletParams:
    return DirichletParams(spec.k, spec.base_measure())


def _execute(spec: ExperimentSpec) -> tuple[str, bool]:
    """Run the command; returns (serialized records, all verifications passed)."""
    params = _params(spec)
    cmd, fmt = spec.command, spec.format

    if cmd == "sample-sticks":
        m = stick_breaking(params, RngStream(spec.seed, 0), spec.trunc_eps)
        _check_finite(m.to_dict())
        return (m.to_csv() if fmt == "csv" else m.to_json() + "\n"), True

    if cmd == "sample-urn":
        urn = polya_urn(params, RngStream(spec.seed, 0), spec.n)
        d = urn.to_dict()
        _check_finite(d)
        if fmt == "json":
            return json.dumps(d, indent=1) + "\n", True
        rows = [{"index": i, **draw} for i, draw in enumerate(d["draws"])]
        return _records_csv("urn-draws", rows), True

    if cmd == "verify-hgamma":
        recs = [r.to_dict() for r in verify_h_gamma(params, [spec.gamma], spec.reps, spec.seed,
                                                     spec.trunc_eps)]
        kind = "hgamma"
    elif cmd == "certificate":
        cert = discreteness_certificate(params, spec.gamma_grid, spec.reps, spec.seed,
                                        spec.trunc_eps)
        d = cert.to_dict()
        recs = d.pop("records") + [{"summary": d}]
        kind = "certificate"
    elif cmd == "verify-lemma":
        recs = [lemma_equivalence_test(parse_function(f), params, spec.reps, spec.seed,
                                       spec.trunc_eps).to_dict() for f in spec.functions]
        kind = "lemma"
    elif cmd == "atom-density":
        rep = atom_density_check(params, spec.intervals, spec.reps, spec.seed, spec.trunc_eps,
                                 spec.ladder)
        recs = [r.to_dict() for r in rep.intervals]
        kind = "atom-density"
    else:  # pragma: no cover - validated upstream
        raise SpecError("command", f"unknown command {cmd!r}")

    _check_finite(recs)
    passed = all(r["summary"]["pass"] if "summary" in r else r["pass"] for r in recs)
    text = _records_csv(kind, recs) if fmt == "csv" else _records_jsonl(recs)
    return text, passed


def manifest(spec: ExperimentSpec, wall_time: float, passed: bool) -> dict:
    return {
        "spec": spec.to_dict(),
        "library_version": __version__,
        "generator_family": GENERATOR_FAMILY,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "threads": thread_count(),
        "pass": passed,
        "wall_time_s": wall_time,
    }


def run(spec: ExperimentSpec, stdout=None, stderr=None) -> int:
    """Execute ``spec`` and write its records and manifest; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    spec = spec.with_seed()
    t0 = time.perf_counter()
    try:
        text, passed = _execute(spec)
    except NonFiniteOutput as exc:
        stderr.write(json.dumps({"error": str(exc), "kind": "non-finite"}) + "\n")
        return 1
    man = manifest(spec, time.perf_counter() - t0, passed)
    if spec.output:
        out = Path(spec.output)
        out.write_text(text)
        Path(f"{out}.manifest.json").write_text(json.dumps(man, indent=1) + "\n")
    else:
        stdout.write(text)
        stderr.write(json.dumps(man) + "\n")
    return 0 if passed else 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": message}) + "\n")
        sys.exit(2)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dp-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND",
                         parser_class=_Parser)
    S = argparse.SUPPRESS
    for name in COMMANDS:
        c = sub.add_parser(name, argument_default=S)
        c.add_argument("--config", help="key=value or JSON config file; flags override it")
        c.add_argument("--k", help="concentration (total mass) k > 0")
        c.add_argument("--base", help="base measure, e.g. uniform, mixed, 0.3*normal(0,1)+0.7*atom(1)")
        c.add_argument("--seed")
        c.add_argument("--output", help="records file (default: stdout)")
        c.add_argument("--format", choices=("csv", "json"))
        c.add_argument("--trunc-eps", dest="trunc_eps")
        if name == "sample-urn":
            c.add_argument("--n", help="sequence length")
        if name not in ("sample-sticks", "sample-urn"):
            c.add_argument("--reps", help="Monte Carlo replicates")
        if name == "verify-hgamma":
            c.add_argument("--gamma")
        if name == "certificate":
            c.add_argument("--gamma-grid", dest="gamma_grid", help="decreasing, comma separated")
        if name == "verify-lemma":
            c.add_argument("--function", dest="functions",
                           help="'all' or ';'-separated constant:c, power:g, set:lo:hi, "
                                "indicator:alo:ahi:blo:bhi")
        if name == "atom-density":
            c.add_argument("--intervals", help="comma separated lo:hi pairs")
            c.add_argument("--ladder", help="trunc_eps ladder, comma separated")
    return p


def main(argv=None) -> int:
    args = vars(_parser().parse_args(argv))
    config = args.pop("config", None)
    try:
        overrides = {k: convert_value(k, v) for k, v in args.items()}
        spec = config_load(config, overrides) if config else build_spec(None, overrides)
    except SpecError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}) + "\n")
        return 2
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
