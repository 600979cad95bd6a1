# scripts/cli.py

import argparse
import csv
import json
import logging
import math
import os
import sys
from typing import List, NoReturn, Optional, Tuple

from src import __version__
from src.besov import BesovParams, besov_terms, lp_norm, sum_terms
from src.config import AnalysisOptions, SimConfig, config_digest, config_document, parse_config
from src.diagnostics import dissipation_scaling_fit, gronwall_monitor, read_records, record_line
from src.errors import ConfigurationError, InsufficientDataError, QuatflowError
from src.field import COMPONENTS, QField, l2_norm_sq
from src.littlewood_paley import build_filter_bank, decompose
from src.manifest import RunManifest
from src.presets import PRESETS, get_preset, with_forcing_amplitude
from src.snapshot import read_snapshot, write_snapshot
from src.solver import BLOW_UP, picard_iterate, simulate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOW_UP = 2

DIAGNOSTICS_NAME = "diagnostics.ndjson"
CONFIG_NAME = "config.json"
FINAL_SNAPSHOT = "final.qfld"
PICARD_NAME = "picard.json"


def besov_index(value: str) -> float:
    """
    argparse type for p and q_idx: a number or "inf".
    """
    if value.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(value)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def load_run(args: argparse.Namespace) -> Tuple[SimConfig, AnalysisOptions, QField]:
    """
    Resolves the configuration and initial field of a simulate run.

    A preset supplies both; --config replaces the preset's configuration and
    --initial replaces its field.
    """
    preset = get_preset(args.preset) if args.preset else None
    if args.config:
        cfg, analysis = parse_config(args.config)
    elif preset is not None:
        cfg, analysis = preset.build_config()
    else:
        raise ConfigurationError("simulate needs --config or --preset")

    if args.initial:
        q0 = read_snapshot(args.initial, expected_grid=cfg.grid)
    elif preset is not None:
        q0 = preset.build_field(cfg.grid)
    else:
        raise ConfigurationError("simulate with --config needs --initial or --preset for the initial field")

    if args.amplitude is not None:
        cfg = with_forcing_amplitude(cfg, args.amplitude)
    return cfg, analysis, q0


def prepare_output_dir(path: str) -> None:
    """
    Creates the run directory when its parent exists.
    """
    if os.path.isdir(path):
        return
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ConfigurationError(f"cannot create output directory '{path}': parent '{parent}' does not exist")
    os.mkdir(path)


def run_simulate(args: argparse.Namespace) -> int:
    cfg, analysis, q0 = load_run(args)
    out = args.output
    prepare_output_dir(out)
    manifest = RunManifest(config_digest=config_digest(cfg, analysis))

    try:
        with open(os.path.join(out, CONFIG_NAME), "w") as f:
            json.dump(config_document(cfg, analysis), f, indent=4, sort_keys=True)
        manifest.add_file(CONFIG_NAME)

        def on_step(state) -> None:
            every = analysis.snapshot_every
            if every and state.step_index % every == 0:
                name = f"step_{state.step_index:06d}.qfld"
                write_snapshot(state.q_hat.to_physical(check_symmetry=False), os.path.join(out, name))
                manifest.add_file(name)

        with open(os.path.join(out, DIAGNOSTICS_NAME), "w") as diag:
            manifest.add_file(DIAGNOSTICS_NAME)
            trajectory = simulate(cfg, q0, on_record=lambda rec: diag.write(record_line(rec)), on_step=on_step)

        write_snapshot(trajectory.final_state.q_hat.to_physical(check_symmetry=False), os.path.join(out, FINAL_SNAPSHOT))
        manifest.add_file(FINAL_SNAPSHOT)

        if args.picard:
            report = picard_iterate(cfg, q0, analysis.picard_max_iter, analysis.picard_tol)
            with open(os.path.join(out, PICARD_NAME), "w") as f:
                json.dump(report.to_dict(), f, indent=4, sort_keys=True)
            manifest.add_file(PICARD_NAME)
            print(f"Picard: converged={report.converged} contracting={report.contracting} "
                  f"iterations={report.iterations} factor={report.contraction_factor:.4g}")
    except (QuatflowError, OSError) as e:
        manifest.finish("error", str(e))
        manifest.save_to_file(out)
        raise

    message = str(trajectory.error) if trajectory.error is not None else None
    manifest.finish(trajectory.outcome, message)
    manifest.save_to_file(out)

    final = trajectory.records[-1]
    print(f"Run {trajectory.outcome}: t={final.t:.6g}, steps={final.step_index}, "
          f"energy={final.total_energy:.6e}, records={len(trajectory.records)}")
    print(f"Output written to '{out}'")
    if trajectory.outcome == BLOW_UP:
        print(f"Blow-up: {message}", file=sys.stderr)
        return EXIT_BLOW_UP
    return EXIT_OK


def run_decompose(args: argparse.Namespace) -> int:
    field = read_snapshot(args.snapshot)
    bank = build_filter_bank(field.grid, j_min=args.j_min)
    decomp = decompose(field, bank)
    spec = field.to_spectral()
    total = l2_norm_sq(spec)
    error = l2_norm_sq(decomp.reconstruct() - spec)
    rel_error = math.sqrt(error / total) if total > 0 else math.sqrt(error)

    blocks = [("low", decomp.low_block)] + [(str(j), decomp.bands[j]) for j in sorted(decomp.bands)]
    header = ["j"] + [f"E_{c}" for c in COMPONENTS] + ["E", "reconstruction_error"]
    stream = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for key, block in blocks:
            energies = [block.energy(k) for k in range(4)]
            writer.writerow([key] + [f"{e:.12e}" for e in energies] + [f"{block.energy():.12e}", f"{rel_error:.3e}"])
    finally:
        if args.output:
            stream.close()
    return EXIT_OK


def run_norms(args: argparse.Namespace) -> int:
    field = read_snapshot(args.snapshot)
    if args.scale != 1.0:
        field = field * args.scale
    params = BesovParams(s=args.s, p=args.p, q_idx=args.q_idx)
    bank = build_filter_bank(field.grid, j_min=args.j_min)
    terms = besov_terms(field, bank, params)
    report = {
        "params": params.to_dict(),
        "lp_norm": lp_norm(field, params.p),
        "besov_norm": sum_terms([v for _, v in terms], params.q_idx),
        "terms": {key: value for key, value in terms},
    }
    if args.json:
        print(json.dumps(report, indent=4))
        return EXIT_OK
    print(f"L^{args.p:g} norm:        {report['lp_norm']:.12e}")
    print(f"Besov B^{args.s:g}_{{{args.p:g},{args.q_idx:g}}} norm: {report['besov_norm']:.12e}")
    print("Weighted band contributions 2^(js) ||Delta_j f||_Lp:")
    for key, value in terms:
        print(f"  {key:>5}: {value:.12e}")
    return EXIT_OK


def analysis_document(path: str) -> dict:
    records = read_records(path)
    doc: dict = {"source": path, "n_records": len(records)}
    try:
        doc["scaling_fit"] = dissipation_scaling_fit(records).to_dict()
    except InsufficientDataError as e:
        doc["scaling_fit"] = {"error": str(e)}
    doc["gronwall"] = gronwall_monitor(records).to_dict()
    return doc


def print_analysis(doc: dict) -> None:
    print(f"Diagnostics: {doc['source']} ({doc['n_records']} records)")
    fit = doc["scaling_fit"]
    if "error" in fit:
        print(f"Dissipation scaling: {fit['error']}")
    else:
        verdict = "PASS" if fit["slope_in_range"] else "FAIL"
        print(f"Dissipation scaling slope: {fit['slope']:.4f} +/- {fit['stderr']:.2g} [{verdict}]")
        for band in fit["bands"]:
            mark = "inside" if band["inside"] else "OUTSIDE"
            print(f"  band {band['j']:>3}: ratio [{band['min_ratio']:.4g}, {band['max_ratio']:.4g}] "
                  f"bracket [{band['lower']:.4g}, {band['upper']:.4g}] {mark}")
    g = doc["gronwall"]
    censored = " (censored by blow-up)" if g["censored"] else ""
    print(f"Gronwall minimal C: {g['minimal_c']}{censored}, contact at t={g['contact_time']}")
    print(f"Forcing L^r-in-time norm: {g['forcing_lr_norm']:.6g}")


def run_analyze(args: argparse.Namespace) -> int:
    doc = analysis_document(args.diagnostics)
    # Default report lands in the working directory; run directories hold only manifest-listed files
    output = args.output or os.path.splitext(os.path.basename(args.diagnostics))[0] + ".analysis.json"
    with open(output, "w") as f:
        json.dump(doc, f, indent=4, sort_keys=True)
    if args.json:
        print(json.dumps(doc, indent=4, sort_keys=True))
    else:
        print_analysis(doc)
        print(f"Report written to '{output}'")
    return EXIT_OK


class QuatflowParser(argparse.ArgumentParser):
    """
    Argument parser whose usage errors exit with EXIT_ERROR, keeping 2 for blow-up.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = QuatflowParser(prog="quatflow", description="Quaternionic Navier-Stokes solver and Besov analysis")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log progress (-v) or detail (-vv)")
    parser.add_argument("--version", action="version", version=f"quatflow {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Simulate
    parser_sim = subparsers.add_parser("simulate", help="Run the solver and write diagnostics")
    parser_sim.add_argument("--config", type=str, help="JSON run configuration")
    parser_sim.add_argument("--preset", type=str, choices=sorted(PRESETS), help="Named preset run")
    parser_sim.add_argument("--initial", type=str, help="Initial field snapshot")
    parser_sim.add_argument("--output", type=str, default="run", help="Run directory")
    parser_sim.add_argument("--amplitude", type=float, help="Override the forcing amplitude")
    parser_sim.add_argument("--picard", action="store_true", help="Also write a Picard iteration report")

    # Decompose
    parser_dec = subparsers.add_parser("decompose", help="Per-band energy table of a snapshot")
    parser_dec.add_argument("snapshot", type=str, help="Snapshot file")
    parser_dec.add_argument("--j-min", type=int, default=None, help="Lowest band of the filter bank")
    parser_dec.add_argument("--output", type=str, help="CSV file (stdout when omitted)")

    # Norms
    parser_norms = subparsers.add_parser("norms", help="L^p and Besov norms of a snapshot")
    parser_norms.add_argument("snapshot", type=str, help="Snapshot file")
    parser_norms.add_argument("--s", type=float, default=2.0, help="Smoothness index")
    parser_norms.add_argument("--p", type=besov_index, default=2.0, help="Integrability index (number or inf)")
    parser_norms.add_argument("--q-idx", type=besov_index, default=2.0, help="Summability index (number or inf)")
    parser_norms.add_argument("--scale", type=float, default=1.0, help="Multiply the field before measuring")
    parser_norms.add_argument("--j-min", type=int, default=None, help="Lowest band of the filter bank")
    parser_norms.add_argument("--json", action="store_true", help="Print a JSON report")

    # Analyze
    parser_an = subparsers.add_parser("analyze", help="Scaling-fit and Gronwall reports of a diagnostics file")
    parser_an.add_argument("diagnostics", type=str, help="Diagnostics NDJSON file")
    parser_an.add_argument("--output", type=str, help="JSON report path")
    parser_an.add_argument("--json", action="store_true", help="Print the JSON report")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_ERROR
    configure_logging(args.verbose)

    try:
        if args.command == "simulate":
            return run_simulate(args)
        elif args.command == "decompose":
            return run_decompose(args)
        elif args.command == "norms":
            return run_norms(args)
        elif args.command == "analyze":
            return run_analyze(args)
        else:
            parser.print_help()
            return EXIT_ERROR
    except (QuatflowError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
