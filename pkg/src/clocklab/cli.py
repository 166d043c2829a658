"""Laboratory driver: spectra, gap scans, search runs, gadget checks.

Every subcommand emits a JSON record (schema_version + timestamp) or a
CSV table; report-style commands additionally render a PNG figure next
to the delimited output. Exit codes: 0 success, 1 usage problems, 2
unreadable or malformed input files, 3 capacity or convergence
failures.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from .amplification import amplify, check_frustration_free, attach_ancilla_pivot, verify_amplified_gap
from .circuit import (
    build_controlled_grover,
    build_grover,
    build_modified_grover,
    build_trivial,
    load_circuit,
    parse_circuit,
    serialize_circuit,
)
from .errors import (
    CapacityError,
    CircuitSyntaxError,
    ClockLabError,
    NonConvergenceError,
)
from .gadget import QueryLedger, build_kernel, diagonalize_coupling, fit_query_exponent, gadget_fidelity, query_sweep
from .hamiltonian import build_feynman, build_history_state, build_standard, oracle_split
from .search import SearchConfig, run_generalized_search
from .spectral import (
    check_inverse_square_consistency,
    eigendecompose,
    fit_gap_scaling,
    spectral_gap,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

FAMILY_CHOICES = ("trivial", "grover", "modified-grover", "controlled-grover")
SEARCH_FAMILY_CHOICES = ("modified-grover", "controlled-grover")
GAP_CSV_FIELDS = ("family", "n", "L", "gap")
GAP_CSV_FIELDS_AMPLIFIED = ("family", "n", "L", "gap", "amplified_gap", "ratio")
LEDGER_CSV_FIELDS = ("t", "oracle_count", "steps", "error")


class UsageError(Exception):
    pass


class InputDataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so main() can map usage errors to code 1."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# small helpers


def _utc_stamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _emit_json(payload: dict, path) -> None:
    record = {"schema_version": SCHEMA_VERSION, "generated_at": _utc_stamp()}
    record.update(payload)
    text = json.dumps(record, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _write_csv(fields, rows, path) -> None:
    if path:
        handle = open(path, "w", newline="")
    else:
        handle = sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=list(fields))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})
    finally:
        if path:
            handle.close()


def _default(value, fallback):
    return fallback if value is None else value


def _int_list(value, flag, fallback):
    value = _default(value, fallback)
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
    else:
        parts = list(value)
    try:
        out = [int(p) for p in parts]
    except (TypeError, ValueError):
        raise UsageError(f"{flag} expects a comma-separated list of integers")
    if not out or any(v < 1 for v in out):
        raise UsageError(f"{flag} expects positive integers")
    return out


def _float_list(value, flag, fallback):
    value = _default(value, fallback)
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
    else:
        parts = list(value)
    try:
        out = [float(p) for p in parts]
    except (TypeError, ValueError):
        raise UsageError(f"{flag} expects a comma-separated list of numbers")
    if not out:
        raise UsageError(f"{flag} expects at least one number")
    return out


def _family_circuit(family: str, n: int, length: int):
    if n < 1:
        raise UsageError(f"--n must be at least 1, got {n}")
    if length < 1:
        raise UsageError(f"--length must be at least 1, got {length}")
    try:
        if family == "trivial":
            return build_trivial(n, length)
        marked = "0" * n
        if family == "grover":
            if length % 2:
                raise UsageError(f"grover needs an even length, got {length}")
            return build_grover(n, length // 2, marked)
        if family == "modified-grover":
            if length % 4:
                raise UsageError(f"modified-grover needs length divisible by 4, got {length}")
            return build_modified_grover(n, marked, iterations=length // 4)
        if family == "controlled-grover":
            if length % 4:
                raise UsageError(f"controlled-grover needs length divisible by 4, got {length}")
            return build_controlled_grover(n, marked, l0=length // 2, length=length)
    except ValueError as exc:
        raise UsageError(str(exc))
    raise UsageError(f"unknown family {family!r}; choose from {FAMILY_CHOICES}")


def _load_circuit_file(path: str):
    try:
        return load_circuit(path)
    except CircuitSyntaxError as exc:
        raise InputDataError(f"{path}: {exc}")
    except OSError as exc:
        raise InputDataError(str(exc))
    except ValueError as exc:
        raise InputDataError(f"{path}: {exc}")


def _resolve_circuit(args):
    circuit_path = getattr(args, "circuit", None)
    family = getattr(args, "family", None)
    if circuit_path and family:
        raise UsageError("give either --circuit or --family, not both")
    if circuit_path:
        return _load_circuit_file(circuit_path)
    if family:
        n = _default(getattr(args, "n", None), 2)
        length = getattr(args, "length", None)
        if length is None:
            raise UsageError("--family needs --length")
        return _family_circuit(family, int(n), int(length))
    raise UsageError("need --circuit FILE or --family NAME")


def _figure_path(output, explicit):
    if explicit:
        return Path(explicit)
    return Path(output).with_suffix(".png")


def _circuit_summary(c) -> dict:
    return {
        "n": c.n,
        "length": c.length,
        "control_ancilla": bool(c.has_control_ancilla),
        "oracle": c.oracle,
        "gates": [g.kind for g in c.gates],
    }


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_parse(args) -> int:
    try:
        text = Path(args.path).read_text()
    except OSError as exc:
        raise InputDataError(str(exc))
    try:
        c = parse_circuit(text)
    except CircuitSyntaxError as exc:
        raise InputDataError(f"{args.path}: {exc}")
    except ValueError as exc:
        raise InputDataError(f"{args.path}: {exc}")
    canonical = serialize_circuit(c)
    if args.output:
        Path(args.output).write_text(canonical)
    else:
        sys.stdout.write(canonical)
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    c = _resolve_circuit(args)
    g = _default(args.g, 1.0)
    builder = build_feynman if args.transitions_only else build_standard
    h = builder(c, g)
    result = eigendecompose(h, want_vectors=False)
    report = spectral_gap(result)
    eigenvalues = [float(v) for v in result.eigenvalues]
    truncated = len(eigenvalues) > 64
    payload = {
        "command": "spectrum",
        "circuit": _circuit_summary(c),
        "g": g,
        "builder": "transitions-only" if args.transitions_only else "standard",
        "dim": result.dim,
        "method": result.method,
        "lambda0": report.lambda0,
        "lambda1": report.lambda1,
        "gap": report.gap,
        "ground_degeneracy": report.ground_degeneracy,
        "eigenvalues": eigenvalues[:64],
        "eigenvalues_truncated": truncated,
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def _scan_rows(family: str, ns, lengths, g: float, amplified: bool):
    rows = []
    for n in ns:
        for length in lengths:
            c = _family_circuit(family, n, length)
            h = build_standard(c, g)
            gap = spectral_gap(eigendecompose(h, want_vectors=False)).gap
            row = {"family": family, "n": n, "L": length, "gap": gap}
            if amplified:
                amp_row = verify_amplified_gap(c, g)
                row["amplified_gap"] = amp_row.amplified_gap
                row["ratio"] = amp_row.ratio
            rows.append(row)
    return rows


def _cmd_gap_scan(args) -> int:
    family = _default(args.family, "trivial")
    if family not in FAMILY_CHOICES:
        raise UsageError(f"unknown family {family!r}; choose from {FAMILY_CHOICES}")
    ns = _int_list(args.n, "--n", "2")
    lengths = _int_list(args.lengths, "--lengths", "4,8,16,32,64")
    g = _default(args.g, 1.0)
    amplified = bool(_default(args.amplified, False))
    want_figure = args.figure
    if want_figure is None:
        want_figure = args.output is not None
    if want_figure and args.output is None:
        raise UsageError("a figure needs --output to anchor its path")

    rows = _scan_rows(family, ns, lengths, g, amplified)
    fields = GAP_CSV_FIELDS_AMPLIFIED if amplified else GAP_CSV_FIELDS
    _write_csv(fields, rows, args.output)

    fits = []
    for n in ns:
        pts = [(r["L"], r["gap"]) for r in rows if r["n"] == n]
        if len(pts) >= 3:
            fit = fit_gap_scaling(pts)
            fits.append(
                {"n": n, "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}
            )
    if args.json:
        _emit_json(
            {
                "command": "gap-scan",
                "family": family,
                "g": g,
                "rows": rows,
                "fits": fits,
                "csv": str(args.output) if args.output else None,
            },
            args.json,
        )
    if want_figure:
        from .plotting import save_gap_scan_figure

        save_gap_scan_figure(rows, _figure_path(args.output, None))
    return EXIT_OK


def _cmd_amplify(args) -> int:
    c = _resolve_circuit(args)
    g = _default(args.g, 1.0)
    h = build_standard(c, g)
    history = build_history_state(c, g)
    ff = check_frustration_free(h.term_list, history.state.amplitudes)
    amp = amplify(h.term_list, history.state.amplitudes)
    zero_mode = attach_ancilla_pivot(history.state, amp.ancilla_dim)
    residual = float(np.linalg.norm(amp.sparse() @ zero_mode))
    row = verify_amplified_gap(c, g)
    payload = {
        "command": "amplify",
        "circuit": _circuit_summary(c),
        "g": g,
        "frustration_free": ff.is_ff,
        "terms": [
            {
                "kind": t.kind,
                "index": t.index,
                "min_eigenvalue": t.min_eigenvalue,
                "state_residual": t.state_residual,
            }
            for t in ff.per_term
        ],
        "ancilla_dim": amp.ancilla_dim,
        "zero_mode_residual": residual,
        "gap": row.gap,
        "amplified_gap": row.amplified_gap,
        "ratio_to_sqrt_gap": row.ratio,
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def _cmd_search(args) -> int:
    family = _default(args.family, "modified-grover")
    if family not in SEARCH_FAMILY_CHOICES:
        raise UsageError(
            f"unknown search family {family!r}; choose from {SEARCH_FAMILY_CHOICES}"
        )
    mode = _default(args.mode, "exact-projective")
    if mode not in ("exact-projective", "phase-randomization"):
        raise UsageError(f"unknown mode {mode!r}")
    cfg = SearchConfig(
        family=family.replace("-", "_"),
        n=int(_default(args.n, 2)),
        mode=mode.replace("-", "_"),
        trials=int(_default(args.trials, 500)),
        seed=int(_default(args.seed, 0)),
        c_constant=float(_default(args.c_constant, math.pi)),
        reps=int(_default(args.reps, 3)),
        count_queries=not args.no_queries,
        trotter_order=int(_default(args.order, 1)),
    )
    try:
        outcome = run_generalized_search(cfg)
    except ValueError as exc:
        raise UsageError(str(exc))
    payload = {
        "command": "search",
        "family": family,
        "n": outcome.n,
        "mode": mode,
        "trials": outcome.trials,
        "seed": outcome.seed,
        "success_count": outcome.success_count,
        "empirical_success_rate": outcome.empirical_p_s,
        "reference_overlap": outcome.p_nu_zeta,
        "marked_readout_weight": outcome.p_x_zeta,
        "success_lower_bound": outcome.p_s_lower,
        "gap": outcome.delta,
        "evolution_time": outcome.measured_T,
        "oracle_count": outcome.oracle_count,
        "c_constant": outcome.c_constant,
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def _cmd_gadget_check(args) -> int:
    if getattr(args, "circuit", None) is None and getattr(args, "family", None) is None:
        args.family = "modified-grover"
        args.n = _default(args.n, 2)
        args.length = _default(args.length, 4)
    c = _resolve_circuit(args)
    s_values = _float_list(args.s, "--s", "0.01,0.05,0.1,0.5")
    seed = int(_default(args.seed, 0))
    try:
        rows = gadget_fidelity(c, s_values, seed=seed)
        split = oracle_split(c)
        diag = diagonalize_coupling(split)
    except ValueError as exc:
        raise UsageError(str(exc))
    rotation_drift = 0.0
    for s in s_values:
        kernel = build_kernel(s * diag.lambdas)
        for k in range(diag.dim):
            for rot in (kernel.r1(k), kernel.r2(k)):
                drift = np.abs(rot.conj().T @ rot - np.eye(2)).max()
                rotation_drift = max(rotation_drift, float(drift))
    all_ok = all(r.fidelity >= 1.0 - 1e-9 for r in rows) and rotation_drift <= 1e-9
    payload = {
        "command": "gadget-check",
        "circuit": _circuit_summary(c),
        "seed": seed,
        "rows": [
            {
                "s": r.s_param,
                "fidelity": r.fidelity,
                "success_probability": r.success_probability,
                "renormalization": r.renormalization,
                "attempts": r.attempts,
            }
            for r in rows
        ],
        "rotation_unitarity_drift": rotation_drift,
        "all_ok": all_ok,
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def _cmd_theorem_report(args) -> int:
    family = _default(args.family, "modified-grover")
    if family not in FAMILY_CHOICES:
        raise UsageError(f"unknown family {family!r}; choose from {FAMILY_CHOICES}")
    n = int(_default(args.n, 2))
    lengths = _int_list(args.lengths, "--lengths", "4,8,16,32")
    times = _float_list(args.times, "--times", "1,2,4,8")
    order = int(_default(args.order, 1))
    if order not in (1, 2):
        raise UsageError(f"--order must be 1 or 2, got {order}")
    target_error = float(_default(args.target_error, 1e-3))
    if target_error <= 0:
        raise UsageError("--target-error must be positive")
    seed = int(_default(args.seed, 0))
    query_length = int(_default(args.query_length, lengths[0]))
    prefix = Path(args.output)

    rows = _scan_rows(family, [n], lengths, 1.0, amplified=False)
    report = check_inverse_square_consistency([(r["L"], r["gap"]) for r in rows])

    ledger = QueryLedger()
    sweep_circuit = _family_circuit(family, n, query_length)
    entries = query_sweep(
        sweep_circuit, times, target_error=target_error, order=order, seed=seed, ledger=ledger
    )
    gamma = fit_query_exponent(entries)

    gaps_csv = prefix.with_name(prefix.name + "_gaps.csv")
    ledger_csv = prefix.with_name(prefix.name + "_ledger.csv")
    _write_csv(GAP_CSV_FIELDS, rows, gaps_csv)
    _write_csv(
        LEDGER_CSV_FIELDS,
        [
            {"t": e.t, "oracle_count": e.oracle_count, "steps": e.steps, "error": e.error}
            for e in entries
        ],
        ledger_csv,
    )

    files = [str(gaps_csv), str(ledger_csv)]
    if _default(args.figure, True):
        from .plotting import save_ledger_figure, save_theorem_figure

        gaps_png = gaps_csv.with_suffix(".png")
        ledger_png = ledger_csv.with_suffix(".png")
        save_theorem_figure(report, gaps_png)
        save_ledger_figure(entries, ledger_png, fit=gamma)
        files.extend([str(gaps_png), str(ledger_png)])

    payload = {
        "command": "theorem-report",
        "family": family,
        "n": n,
        "order": order,
        "seed": seed,
        "target_error": target_error,
        "query_length": query_length,
        "gap_rows": rows,
        "anchored_c2": report.c2,
        "fit_slope": report.fit.slope,
        "fit_r_squared": report.fit.r_squared,
        "slope_band": list(report.slope_band),
        "bound_rows": [
            {"L": r.length, "gap": r.gap, "lower_bound": r.lower_bound, "margin": r.margin}
            for r in report.rows
        ],
        "gap_consistent": report.consistent,
        "query_rows": [
            {"t": e.t, "oracle_count": e.oracle_count, "steps": e.steps, "error": e.error}
            for e in entries
        ],
        "query_exponent": gamma.gamma,
        "query_fit_r_squared": gamma.r_squared,
        "total_oracle_calls": ledger.oracle_count,
        "files": files,
    }
    _emit_json(payload, prefix.with_suffix(".json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def _add_circuit_source(sub) -> None:
    sub.add_argument("--circuit", help="circuit description file")
    sub.add_argument("--family", help="built-in family instead of a file")
    sub.add_argument("--n", type=int, help="register size for --family")
    sub.add_argument("--length", type=int, help="circuit length for --family")


def build_parser() -> _Parser:
    parser = _Parser(prog="clocklab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default options (flags win)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("parse", help="validate a circuit file and print its canonical form")
    p.add_argument("path", help="circuit description file")
    p.add_argument("--output", help="write the canonical form here instead of stdout")
    p.set_defaults(handler=_cmd_parse)

    p = sub.add_parser("spectrum", help="eigenvalues and gap of a clock Hamiltonian")
    _add_circuit_source(p)
    p.add_argument("--g", type=float, help="interpolation parameter (default 1)")
    p.add_argument(
        "--transitions-only",
        action="store_true",
        help="drop the input penalty (uniform-spectrum operator)",
    )
    p.add_argument("--output", help="write the JSON record here instead of stdout")
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("gap-scan", help="gap against circuit length, CSV plus figure")
    p.add_argument("--family", help=f"one of {', '.join(FAMILY_CHOICES)}")
    p.add_argument("--n", help="register sizes, comma separated (default 2)")
    p.add_argument("--lengths", help="circuit lengths, comma separated (default 4,8,16,32,64)")
    p.add_argument("--g", type=float, help="interpolation parameter (default 1)")
    p.add_argument("--amplified", action="store_true", default=None, help="include amplified gaps")
    p.add_argument("--output", help="CSV path (stdout when omitted)")
    p.add_argument("--json", help="also write a JSON summary with power-law fits")
    p.add_argument(
        "--figure",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="render a PNG next to the CSV (default: on when --output is set)",
    )
    p.set_defaults(handler=_cmd_gap_scan)

    p = sub.add_parser("amplify", help="frustration-free certificate and amplified gap")
    _add_circuit_source(p)
    p.add_argument("--g", type=float, help="interpolation parameter (default 1)")
    p.add_argument("--output", help="write the JSON record here instead of stdout")
    p.set_defaults(handler=_cmd_amplify)

    p = sub.add_parser("search", help="run the measurement-driven search protocol")
    p.add_argument("--family", help=f"one of {', '.join(SEARCH_FAMILY_CHOICES)}")
    p.add_argument("--n", type=int, help="register size (default 2)")
    p.add_argument("--mode", help="exact-projective or phase-randomization")
    p.add_argument("--trials", type=int, help="number of protocol runs (default 500)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--c-constant", type=float, help="evolution time multiplier c in T = c/gap")
    p.add_argument("--reps", type=int, help="randomization repetitions per measurement")
    p.add_argument("--order", type=int, help="product-formula order for query accounting")
    p.add_argument(
        "--no-queries",
        action="store_true",
        help="skip the oracle-cost calibration in phase-randomization mode",
    )
    p.add_argument("--output", help="write the JSON record here instead of stdout")
    p.set_defaults(handler=_cmd_search)

    p = sub.add_parser("gadget-check", help="verify the fractional-query gadget")
    _add_circuit_source(p)
    p.add_argument("--s", help="fraction values, comma separated (default 0.01,0.05,0.1,0.5)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--output", help="write the JSON record here instead of stdout")
    p.set_defaults(handler=_cmd_gadget_check)

    p = sub.add_parser(
        "theorem-report",
        help="gap scaling consistency plus query-cost report with figures",
    )
    p.add_argument("--family", help=f"one of {', '.join(FAMILY_CHOICES)}")
    p.add_argument("--n", type=int, help="register size (default 2)")
    p.add_argument("--lengths", help="circuit lengths for the gap side (default 4,8,16,32)")
    p.add_argument("--times", help="evolution times for the query side (default 1,2,4,8)")
    p.add_argument("--order", type=int, help="product-formula order (default 1)")
    p.add_argument("--target-error", type=float, help="calibration error target (default 1e-3)")
    p.add_argument("--query-length", type=int, help="circuit length for the query side")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--output", required=True, help="output prefix for JSON, CSVs and figures")
    p.add_argument(
        "--figure",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="render PNG figures next to the CSVs (default on)",
    )
    p.set_defaults(handler=_cmd_theorem_report)

    return parser


def _apply_config(args) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputDataError(str(exc))
    except ValueError as exc:
        raise InputDataError(f"{path}: {exc}")
    if not isinstance(data, dict):
        raise InputDataError(f"{path}: config must be a JSON object")
    section = data
    command = getattr(args, "command", None)
    if command and isinstance(data.get(command), dict):
        section = data[command]
    for key, value in section.items():
        if isinstance(value, dict):
            continue
        dest = str(key).replace("-", "_")
        if hasattr(args, dest) and getattr(args, dest) in (None, False):
            setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        _apply_config(args)
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CircuitSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CapacityError, NonConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ClockLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
