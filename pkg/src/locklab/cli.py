"""Command-line front end: lock, attack, and measure with deterministic seeds.

Reports are JSON on stdout (diagnostics on stderr).  The ``result`` object
of a report is bit-reproducible for identical inputs, seed and flags,
independent of ``--threads``.  Exit codes: 0 success, 1 usage, 2 unreadable
or unparseable input, 3 invalid or infeasible specification, 4 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .attacks import (
    AttackError,
    Oracle,
    approximate_sat_attack,
    model_attack_sim,
    removal_attack,
    sat_attack,
)
from .bench import BenchParseError, load_bench, save_bench
from .circuit import Circuit, CircuitError
from .locking import (
    Key,
    LockedCircuit,
    LockingError,
    SasSpec,
    hex_word,
    key_input_wires,
    lock,
    spec_from_json,
    spec_to_json,
)
from .metrics import (
    MetricsError,
    averages_and_theorem2,
    expected_iterations_formula,
    ier,
    ier_sampled,
    ker,
    ker_sampled,
)
from .verify import check_equivalence
from .workload import WorkloadError

EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SPEC = 3
EXIT_INTERNAL = 4

_SCHEME_FLAGS = {"sas": "sas", "rsas": "rsas", "antisat": "antisat",
                 "sfll-flex": "sfll_flex"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D401 - argparse hook
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="locklab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="PRNG seed (u64)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default=None, help="output file (bench)")

    pl = sub.add_parser("lock", help="lock a netlist")
    pl.add_argument("--bench", required=True)
    pl.add_argument("--scheme", required=True, choices=sorted(_SCHEME_FLAGS))
    pl.add_argument("--spec", required=True, help="scheme spec JSON")
    pl.add_argument("--key-out", default=None, help="write the correct key here")
    common(pl)

    pa = sub.add_parser("attack", help="attack a locked netlist")
    pa.add_argument("--bench", help="locked netlist")
    pa.add_argument("--oracle", help="activated-chip netlist")
    pa.add_argument("--mode", required=True, choices=["sat", "approx", "removal", "model"])
    pa.add_argument("--spec", help="spec JSON (model mode)")
    pa.add_argument("--iter-limit", type=int, default=10 ** 6)
    pa.add_argument("--time-limit", type=float, default=None)
    pa.add_argument("--window", type=int, default=50, help="approx settle window")
    pa.add_argument("--sample", type=int, default=10000)
    pa.add_argument("--trials", type=int, default=1000, help="model-mode trials")
    pa.add_argument("--wire", default=None, help="removal target (default auto)")
    pa.add_argument("--dump-cnf", default=None, metavar="DIR")
    common(pa)

    pm = sub.add_parser("metrics", help="measure error rates")
    pm.add_argument("--bench", help="locked netlist")
    pm.add_argument("--oracle", help="original netlist")
    pm.add_argument("--spec", help="scheme spec JSON")
    pm.add_argument("--what", required=True, choices=["ker", "ier", "averages", "expected"])
    pm.add_argument("--key", default=None, help="key file (hex)")
    pm.add_argument("--minterm", default=None, help="minterm hex (ier)")
    pm.add_argument("--sample", type=int, default=None)
    pm.add_argument("--n", type=int, default=None)
    pm.add_argument("--m", type=int, default=None)
    pm.add_argument("--l", type=int, default=None)
    common(pm)
    return p


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _read_key(path: str, width: int) -> Key:
    with open(path, "r", encoding="utf-8") as fh:
        return Key.from_hex(fh.read().strip(), width)


def _frac(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for randomized commands")
    return args.seed


def _load_locked(args) -> tuple[LockedCircuit, str]:
    if not args.bench or not args.spec:
        raise UsageError("--bench and --spec are required here")
    circuit = load_bench(args.bench)
    scheme, spec = spec_from_json(_read_json(args.spec))
    key_wires = key_input_wires(circuit)
    if args.key:
        key = _read_key(args.key, len(key_wires))
    else:
        key = Key((0,) * len(key_wires))
    return LockedCircuit(circuit=circuit, scheme=scheme, spec=spec,
                         correct_key=key), scheme


def _cmd_lock(args) -> dict:
    seed = _require_seed(args)
    circuit = load_bench(args.bench)
    scheme = _SCHEME_FLAGS[args.scheme]
    doc = _read_json(args.spec)
    doc_scheme, spec = spec_from_json(doc)
    if {scheme, doc_scheme} <= {"sas", "rsas"}:
        pass  # sas and rsas share one spec payload
    elif doc_scheme != scheme:
        raise LockingError(
            f"spec file is for scheme {doc_scheme!r}, requested {scheme!r}")
    locked = lock(circuit, scheme, spec, seed)
    if args.out:
        save_bench(locked.circuit, args.out)
    if args.key_out:
        with open(args.key_out, "w", encoding="utf-8") as fh:
            fh.write(locked.correct_key.to_hex() + "\n")
    result = {
        "scheme": scheme,
        "key_bits": len(locked.correct_key),
        "key": locked.correct_key.to_hex(),
        "gates": len(locked.circuit.gates),
        "spec": spec_to_json(scheme, spec),
        "files": {"bench": args.out, "key": args.key_out},
    }
    return result


def _cmd_attack(args) -> dict:
    if args.mode == "model":
        seed = _require_seed(args)
        if not args.spec:
            raise UsageError("model mode needs --spec")
        scheme, spec = spec_from_json(_read_json(args.spec))
        sim = model_attack_sim(spec, trials=args.trials, seed=seed,
                               threads=args.threads)
        result = {
            "mode": "model",
            "scheme": scheme,
            "trials": sim.trials,
            "mean": sim.mean,
            "variance": sim.variance,
            "stderr": sim.stderr,
            "histogram": {str(k): v for k, v in sorted(sim.histogram.items())},
        }
        if isinstance(spec, SasSpec):
            expected = expected_iterations_formula(spec.n, spec.m, spec.l)
            result["expected"] = _frac(expected)
            result["mean_vs_expected"] = sim.mean / float(expected)
        return result

    if not args.bench or not args.oracle:
        raise UsageError("this mode needs --bench and --oracle")
    locked_circuit = load_bench(args.bench)
    oracle = Oracle(load_bench(args.oracle))

    if args.mode == "removal":
        result_circuit = removal_attack(locked_circuit, args.wire or None)
        if args.out:
            save_bench(result_circuit, args.out)
        mismatches: list[str] = []
        equal = None
        width = len(result_circuit.free_inputs)
        if width <= 20:
            mism = _mismatch_minterms(result_circuit, oracle.circuit)
            equal = not mism
            mismatches = [hex_word(x, width) for x in mism[:256]]
        return {
            "mode": "removal",
            "equal_to_oracle": equal,
            "mismatch_count": len(mismatches) if equal is not None else None,
            "mismatch_minterms": mismatches,
            "remaining_gates": len(result_circuit.gates),
            "file": args.out,
        }

    if args.mode == "sat":
        res = sat_attack(locked_circuit, oracle,
                         iteration_limit=args.iter_limit,
                         time_limit=args.time_limit,
                         dump_dir=args.dump_cnf)
        verified = None
        if res.termination == "exhausted":
            from .locking import bind_key

            bound = bind_key(locked_circuit, res.recovered_key)
            mode = "exhaustive" if len(bound.free_inputs) <= 16 else "sat"
            verified = bool(check_equivalence(bound, oracle.circuit, mode=mode))
            if not verified:
                raise AttackError(
                    "exhausted attack produced a functionally wrong key")
        return {
            "mode": "sat",
            "iterations": res.iterations,
            "termination": res.termination,
            "key": res.recovered_key.to_hex(),
            "functionally_correct": verified,
            "oracle_queries": oracle.queries,
        }

    # approx
    seed = _require_seed(args)
    ares = approximate_sat_attack(locked_circuit, oracle,
                                  settle_window=args.window,
                                  sample_count=args.sample, seed=seed)
    return {
        "mode": "approx",
        "iterations": ares.attack.iterations,
        "termination": ares.attack.termination,
        "key": ares.attack.recovered_key.to_hex(),
        "error_estimate": ares.error_estimate,
        "sample_count": ares.sample_count,
    }


def _mismatch_minterms(c1: Circuit, c2: Circuit) -> list[int]:
    from .circuit import constant_columns, minterm_columns, simulate_columns

    wires = list(c1.free_inputs)
    out: list[int] = []
    n = len(wires)
    for start in range(0, 1 << n, 1 << 16):
        width = min(1 << 16, 1 << n)
        lo = min(n, 16)
        cols = minterm_columns(wires[n - lo:], width)
        hi = start >> lo
        cols.update(constant_columns(
            {w: (hi >> (n - lo - 1 - i)) & 1 for i, w in enumerate(wires[: n - lo])},
            width))
        v1 = simulate_columns(c1, cols, width)
        v2 = simulate_columns(c2, cols, width)
        diff = 0
        for o1, o2 in zip(c1.outputs, c2.outputs):
            diff |= v1[o1] ^ v2[o2]
        while diff:
            low = diff & -diff
            out.append(start + low.bit_length() - 1)
            diff ^= low
    return out


def _cmd_metrics(args) -> dict:
    if args.what == "expected":
        if args.spec:
            scheme, spec = spec_from_json(_read_json(args.spec))
            if not isinstance(spec, SasSpec):
                raise MetricsError("expected-iterations needs a partition scheme spec")
            n, m, l = spec.n, spec.m, spec.l
        elif args.n and args.m and args.l:
            n, m, l = args.n, args.m, args.l
        else:
            raise UsageError("expected needs --spec or --n/--m/--l")
        val = expected_iterations_formula(n, m, l)
        return {"what": "expected", "n": n, "m": m, "l": l,
                "expected": _frac(val), "expected_float": float(val)}

    locked, scheme = _load_locked(args)
    if not args.oracle:
        raise UsageError("metrics needs --oracle (the original netlist)")
    original = load_bench(args.oracle)

    if args.what == "averages":
        e_w, gamma, equal = averages_and_theorem2(locked, original)
        return {"what": "averages", "scheme": scheme, "e_w": _frac(e_w),
                "gamma": _frac(gamma), "equal": equal}

    if args.what == "ker":
        if not args.key:
            raise UsageError("ker needs --key")
        key = _read_key(args.key, len(key_input_wires(locked.circuit)))
        if args.sample:
            est = ker_sampled(locked, original, key, args.sample, _require_seed(args))
            return {"what": "ker", "method": "sampled", "estimate": est.value,
                    "low": est.low, "high": est.high, "samples": est.samples}
        val = ker(locked, original, key)
        return {"what": "ker", "method": "exhaustive", "rate": _frac(val)}

    # ier
    if args.minterm is None:
        raise UsageError("ier needs --minterm")
    n = len(locked.spec.input_slice)
    minterm = int(args.minterm, 16)
    if minterm >> n:
        raise MetricsError(f"minterm wider than the {n}-bit slice")
    if args.sample:
        est = ier_sampled(locked, original, minterm, args.sample, _require_seed(args))
        return {"what": "ier", "method": "sampled", "estimate": est.value,
                "low": est.low, "high": est.high, "samples": est.samples}
    val = ier(locked, original, minterm)
    return {"what": "ier", "method": "exhaustive", "rate": _frac(val)}


def main(argv=None) -> int:
    parser = _build_parser()
    start = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        handler = {"lock": _cmd_lock, "attack": _cmd_attack, "metrics": _cmd_metrics}
        result = handler[args.command](args)
        report = {
            "command": args.command,
            "argv": list(argv) if argv is not None else sys.argv[1:],
            "seed": args.seed,
            "threads": args.threads,
            "result": result,
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - start, 6),
        }
        print(json.dumps(report, sort_keys=True))
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, BenchParseError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (LockingError, MetricsError, WorkloadError, CircuitError, AttackError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
