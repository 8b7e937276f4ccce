"""Command-line entry point: ``epsqca <subcommand> [options]``.

Options may also come from a flat ``key = value`` file given with ``--config``;
flags on the command line take precedence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, serialize
from .decay import DEFAULT_CONSTANTS, DecayConstants, fit_decay_constants
from .errors import ComputationError, InputError, ResourceError
from .experiments import error_scan, fit_record, matched_qca, trotter_scan
from .heisenberg import centered_window, fmt, lr_records_to_csv, lr_scan
from .models import PRESETS, preset_models
from .mpo import mpo_compress, mpo_from_dense, mpo_from_layer, mpo_multiply, mpo_to_dense, qca_to_mpo
from .patch import patch_windowed
from .qca import build_qca, contract_circuit, window_size_for
from .spinchain import chain_propagator, max_dense_sites, operator_norm, set_max_dense_sites

PATCH_COLUMNS = (
    "model", "n", "cut", "t", "window_size", "window_lo", "window_hi",
    "integrator_steps", "error_exact", "error_bound", "exact_le_bound",
)
ROUNDTRIP_COLUMNS = ("model", "n", "t", "tol", "max_bond", "bond_dims", "max_entry_error", "truncation_error")
WINDOW_COLUMNS = ("n", "t", "epsilon", "c0", "c1", "window_size")

HEADERS = {
    "lr-scan": "model,n,cut,t,window_size,measured,bound",
    "patch-error": ",".join(PATCH_COLUMNS),
    "qca-error-scan": "model,n,t,block_size,n_cuts,max_cut_error,global_error,triangle_sum,lr_bound_sum,"
    "global_le_triangle,cuts_le_lr",
    "mpo-roundtrip": ",".join(ROUNDTRIP_COLUMNS),
    "trotter-compare": "model,n,t,m,trotter_error,ratio_to_previous",
    "window-size": ",".join(WINDOW_COLUMNS),
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _param(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


def _common(p: argparse.ArgumentParser, t_type=float, t_default="0.5") -> None:
    p.add_argument("--model", default="tfim", help=f"preset: {', '.join(PRESETS)}")
    p.add_argument("--hamiltonian", help="JSON chain file; overrides --model")
    p.add_argument("--n", type=int, default=8, help="number of sites")
    p.add_argument("--seed", type=int, default=0, help="seed for the random preset")
    p.add_argument("--param", type=_param, action="append", default=[], help="model parameter key=value")
    p.add_argument("--t", type=t_type, default=t_type(t_default), help="evolution time")
    p.add_argument("--tol", type=float, default=1e-8, help="time-ordered integrator tolerance")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--config", help="flat key = value file of option defaults")
    p.add_argument("--max-dense-sites", type=int, default=None, help="dense oracle cap (default 10, max 12)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epsqca", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, **kw) -> argparse.ArgumentParser:
        epilog = f"CSV header: {HEADERS[name]}" if name in HEADERS else None
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=epilog)
        _common(p, **kw)
        return p

    p = add("lr-scan", "full-chain vs windowed Heisenberg evolution of the bridging term", t_type=_floats)
    p.add_argument("--cut", type=int, help="cut site (default n // 2)")
    p.add_argument("--windows", type=_ints, default=_ints("2,4,6,8"))

    p = add("patch-error", "windowed patch unitaries and their errors (CSV, or JSON for a .json --out)", t_type=_floats)
    p.add_argument("--cut", type=int)
    p.add_argument("--windows", type=_ints, default=_ints("4,6"))
    p.add_argument("--bound", choices=("auto", "quadrature", "analytic"), default="auto")

    p = add("build-qca", "build the two-layer circuit and write it as JSON")
    p.add_argument("--block", type=int, default=4)

    p = add("qca-error-scan", "QCA error over a (t, block size) grid", t_type=_floats, t_default="0.25,0.5,1.0")
    p.add_argument("--blocks", type=_ints, default=_ints("4,6,8"))
    p.add_argument("--fit-out", help="also fit decay constants and write them here")

    p = add("qca-to-mpo", "compress a QCA circuit into an MPO and write it as JSON")
    p.add_argument("--block", type=int, default=4)
    p.add_argument("--in", dest="infile", help="circuit JSON from build-qca (otherwise built from the model)")
    p.add_argument("--trunc-tol", type=float, default=1e-8)

    p = add("mpo-roundtrip", "dense propagator -> MPO -> dense")
    p.add_argument("--trunc-tol", type=float, default=0.0)

    p = add("trotter-compare", "first-order Lie-Trotter error against step count, with a matched QCA")
    p.add_argument("--steps", type=_ints, default=_ints("8,16,32,64"))
    p.add_argument("--summary-out", help="JSON summary including the matched-accuracy QCA MPO bonds")

    p = sub.add_parser(
        "fit-constants",
        help="fit omega, kappa, mu from a scan CSV",
        description="Fit log error = log omega + kappa|t| - mu|Omega|. Input CSV needs columns t, "
        "block_size (or window_size) and error (or max_cut_error).",
    )
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("window-size", help="block size for a target error", epilog=f"CSV header: {HEADERS['window-size']}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--constants", help="JSON from fit-constants (default c0=4, c1=2)")
    p.add_argument("--out")
    p.add_argument("--config")
    return parser


def _model(args) -> tuple:
    if getattr(args, "hamiltonian", None):
        h = serialize.hamiltonian_from_dict(json.loads(Path(args.hamiltonian).read_text()))
        return h, "custom"
    params = dict(args.param)
    if args.model.startswith("random"):
        params.setdefault("seed", args.seed)
    return preset_models(args.model, args.n, params), args.model


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_lr_scan(args) -> int:
    h, model = _model(args)
    cut = args.cut if args.cut is not None else h.n // 2
    records = lr_scan(h, cut, args.t, args.windows, model=model)
    _emit(lr_records_to_csv(records), args.out)
    bad = [r for r in records if not r.holds]
    _note(f"lr-scan: {len(records)} records, {len(bad)} violate measured <= bound")
    return 1 if bad else 0


def cmd_patch_error(args) -> int:
    h, model = _model(args)
    cut = args.cut if args.cut is not None else h.n // 2
    results = []
    for t in args.t:
        for size in args.windows:
            results.append(patch_windowed(h, cut, centered_window(h.n, cut, size), t, args.tol, bound=args.bound))
    if args.out and args.out.endswith(".json"):
        _emit(serialize.dumps([serialize.patch_to_dict(p) for p in results]), args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PATCH_COLUMNS)
        for p, size in zip(results, [s for _ in args.t for s in args.windows]):
            exact = "" if p.error_exact is None else fmt(p.error_exact)
            ok = "" if p.error_exact is None else int(p.error_exact <= p.error_bound + 1e-8)
            w.writerow([model, h.n, cut, fmt(p.t), size, p.window[0], p.window[1], p.integrator_steps, exact, fmt(p.error_bound), ok])
        _emit(buf.getvalue(), args.out)
    return 0


def cmd_build_qca(args) -> int:
    h, _ = _model(args)
    circuit = build_qca(h, args.t, args.block, args.tol)
    _emit(serialize.dumps(serialize.circuit_to_dict(circuit)), args.out)
    msg = f"build-qca: {len(circuit.u_layer)} U gates, {len(circuit.v_layer)} V gates, sum of cut errors {circuit.error_sum:.3e}"
    if h.n <= max_dense_sites():
        err = operator_norm(chain_propagator(h, args.t).matrix - contract_circuit(circuit).matrix)
        msg += f", dense error {err:.3e}"
    _note(msg)
    return 0


def cmd_qca_error_scan(args) -> int:
    h, model = _model(args)
    record = error_scan(h, args.t, args.blocks, args.tol, model=model, config={"model": model, "params": dict(args.param)})
    _emit(record.to_csv(), args.out)
    if args.fit_out:
        Path(args.fit_out).write_text(fit_record(record).to_json())
    bad = [r for r in record.rows if not (r["global_le_triangle"] and r["cuts_le_lr"])]
    _note(f"qca-error-scan: {len(record.rows)} rows, {len(bad)} violate an inequality, {record.wall_clock:.1f}s")
    return 1 if bad else 0


def cmd_qca_to_mpo(args) -> int:
    if args.infile:
        circuit = serialize.circuit_from_dict(json.loads(Path(args.infile).read_text()))
        h = None
    else:
        h, _ = _model(args)
        circuit = build_qca(h, args.t, args.block, args.tol)
    raw = mpo_multiply(mpo_from_layer(circuit.u_layer, circuit.n), mpo_from_layer(circuit.v_layer, circuit.n))
    m = mpo_compress(raw, args.trunc_tol)
    _emit(serialize.dumps(serialize.mpo_to_dict(m)), args.out)
    msg = (
        f"qca-to-mpo: bonds {list(m.bond_dims)}, uncompressed max bond {raw.max_bond} "
        f"(cap {2 ** (2 * circuit.block_size)}), truncation error {m.truncation_error:.3e}"
    )
    if h is not None and h.n <= max_dense_sites():
        err = operator_norm(chain_propagator(h, circuit.t).matrix - mpo_to_dense(m).matrix)
        msg += f", dense error {err:.3e} (sum of cut errors {circuit.error_sum:.3e})"
    _note(msg)
    return 0


def cmd_mpo_roundtrip(args) -> int:
    h, model = _model(args)
    u = chain_propagator(h, args.t)
    m = mpo_from_dense(u, args.trunc_tol)
    err = float(np.max(np.abs(mpo_to_dense(m).matrix - u.matrix)))
    row = [model, h.n, fmt(args.t), fmt(args.trunc_tol), m.max_bond, " ".join(map(str, m.bond_dims)), fmt(err), fmt(m.truncation_error)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUNDTRIP_COLUMNS)
    w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_trotter_compare(args) -> int:
    h, model = _model(args)
    record = trotter_scan(h, args.t, args.steps, model=model, config={"model": model})
    _emit(record.to_csv(), args.out)
    if args.summary_out:
        target = record.rows[-1]["trotter_error"]
        record.summary = matched_qca(h, args.t, target, args.tol)
        Path(args.summary_out).write_text(record.to_json())
    return 0


def _column(row: dict, *names: str) -> str:
    for name in names:
        if name in row and row[name] != "":
            return row[name]
    raise InputError(f"CSV lacks any of the columns {names}")


def cmd_fit_constants(args) -> int:
    with open(args.infile, newline="") as f:
        rows = list(csv.DictReader(f))
    t = [float(_column(r, "t")) for r in rows]
    w = [float(_column(r, "block_size", "window_size")) for r in rows]
    e = [float(_column(r, "error", "max_cut_error")) for r in rows]
    constants = fit_decay_constants(t, w, e, provenance={"source": str(args.infile)})
    _emit(constants.to_json() + "\n", args.out)
    _note(f"fit-constants: omega={constants.omega:.6g} kappa={constants.kappa:.6g} mu={constants.mu:.6g} r2={constants.r2:.4f}")
    return 0


def cmd_window_size(args) -> int:
    constants = DecayConstants.from_json(Path(args.constants).read_text()) if args.constants else DEFAULT_CONSTANTS
    size = window_size_for(args.n, args.t, args.epsilon, constants)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(WINDOW_COLUMNS)
    w.writerow([args.n, fmt(args.t), fmt(args.epsilon), fmt(constants.c0), fmt(constants.c1), size])
    _emit(buf.getvalue(), args.out)
    return 0


COMMANDS = {
    "lr-scan": cmd_lr_scan,
    "patch-error": cmd_patch_error,
    "build-qca": cmd_build_qca,
    "qca-error-scan": cmd_qca_error_scan,
    "qca-to-mpo": cmd_qca_to_mpo,
    "mpo-roundtrip": cmd_mpo_roundtrip,
    "trotter-compare": cmd_trotter_compare,
    "fit-constants": cmd_fit_constants,
    "window-size": cmd_window_size,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            values = read_config(args.config)
            subparser = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest for a in subparser._actions}
            unknown = sorted(set(values) - known)
            if unknown:
                raise InputError(f"{args.config}: unknown keys {', '.join(unknown)}")
            subparser.set_defaults(**values)
            args = parser.parse_args(argv)
        if getattr(args, "max_dense_sites", None) is not None:
            set_max_dense_sites(args.max_dense_sites)
        return COMMANDS[args.command](args)
    except (InputError, ResourceError, ComputationError, OSError, ValueError) as exc:
        print(f"epsqca {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
