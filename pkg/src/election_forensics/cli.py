"""Command-line front end: batch diagnostics over CSV inputs.

Every subcommand writes a machine-readable ``report.json`` (plus CSV/SVG
artifacts) into ``--out``.  Randomized subcommands require an explicit
``--seed``; there is no wall-clock default, reruns must be reproducible.
Exit codes: 0 success, 1 validation/usage error, 2 I/O error.  Failures
appear on stderr as ``ERROR <code>: <message>`` lines.
"""

from __future__ import annotations

import argparse
import sys
from decimal import Decimal
from pathlib import Path

from . import __version__, anomaly, compare, dynamics, peaks, probkit, scatter, synth
from . import histograms as hist_mod
from .dataset import parse_dataset, partition, serialize_dataset
from .errors import ForensicsError
from .report import build_report, atomic_write_text, input_digest, write_report
from .svgplot import svg_histogram, svg_scatter


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, per the CLI contract
        self.print_usage(sys.stderr)
        raise ForensicsError(message)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_dataset(args) -> "tuple":
    text = _read(args.infile)
    return parse_dataset(text, args.leader), input_digest(args.infile)


def _config(args) -> dict:
    # the output directory is not a semantic input; echoing it would break
    # byte-determinism of report.json across runs into different directories
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _parse_party_list(raw: str) -> list[str]:
    return [p for p in (s.strip() for s in raw.split(",")) if p]


def _parse_window(raw: str) -> tuple[float, float]:
    lo, _, hi = raw.partition(":")
    return float(lo), float(hi)


def cmd_validate(args) -> dict:
    dataset, digest = _load_dataset(args)
    arrays = dataset.counts()
    results = {
        "records": len(dataset),
        "parties": list(dataset.roster.ids),
        "leader": dataset.designated_leader,
        "registered_total": int(arrays.registered.sum()),
        "ballots_total": int(arrays.ballots_cast.sum()),
        "votes_total": {
            p: int(arrays.votes[:, i].sum()) for i, p in enumerate(dataset.roster.ids)
        },
        "machine_counted": int(arrays.machine_counted.sum()),
    }
    return {"results": results, "inputs": [digest]}


def cmd_scatter(args) -> dict:
    dataset, digest = _load_dataset(args)
    if args.parties:
        parties = _parse_party_list(args.parties)
    else:
        parties = list(dataset.roster.ids[:7])
        if scatter.OTHERS not in parties and len(dataset.roster) > 1:
            parties.append(scatter.OTHERS)
    parties = parties[:8]
    out = Path(args.out)
    fits = {}
    svg_series = []
    for party in parties:
        points = scatter.build_points(dataset, party, y_mode=args.y_mode)
        trend = None
        try:
            fit = scatter.fit_trend(points, weighting=args.weighting)
            trend = (fit.slope, fit.intercept)
            fits[party] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "residual_rms": fit.residual_rms,
                "point_count": fit.point_count,
            }
        except ForensicsError as exc:
            fits[party] = {"error": exc.message}
        lines = ["precinct_id,x,y,weight"]
        lines += [f"{p.precinct_id},{p.x:.9f},{p.y:.9f},{p.weight}" for p in points]
        atomic_write_text(out / f"scatter_{party}.csv", "\n".join(lines) + "\n")
        svg_series.append((party, [(p.x, p.y) for p in points], trend))
    if not args.no_plots:
        atomic_write_text(
            out / "scatter.svg",
            svg_scatter(svg_series, title=f"turnout vs {args.y_mode}", y_label=args.y_mode),
        )
    results = {
        "fits": fits,
        "y_mode": args.y_mode,
        "trend_method": f"ordinary least squares, {args.weighting} weighting",
    }
    return {"results": results, "inputs": [digest]}


def cmd_hist(args) -> dict:
    dataset, digest = _load_dataset(args)
    hist = hist_mod.integer_percent_histogram(dataset, args.quantity, args.weight_mode)
    out = Path(args.out)
    lines = ["quantity,bin,weight"]
    lines += [f"{hist.quantity},{b},{w}" for b, w in enumerate(hist.bins)]
    atomic_write_text(out / "hist.csv", "\n".join(lines) + "\n")
    if not args.no_plots:
        atomic_write_text(
            out / "hist.svg",
            svg_histogram(hist.bins, title=f"{args.quantity} ({args.weight_mode})"),
        )
    return {
        "results": {
            "quantity": hist.quantity,
            "weight_mode": hist.weight_mode,
            "total_weight": hist.total(),
            "bins": list(hist.bins),
        },
        "inputs": [digest],
    }


def cmd_bins(args) -> dict:
    dataset, digest = _load_dataset(args)
    table = hist_mod.turnout_bin_table(dataset, args.bin_width)
    out = Path(args.out)
    lines = ["bin_lo,bin_hi,party,votes,precincts"]
    for b in range(table.n_bins):
        lo, hi = table.bin_bounds(b)
        for j, party in enumerate(table.parties):
            lines.append(f"{lo:.4f},{hi:.4f},{party},{table.votes[b][j]},{table.precinct_counts[b]}")
    atomic_write_text(out / "bins.csv", "\n".join(lines) + "\n")
    return {
        "results": {
            "bin_width": table.bin_width,
            "n_bins": table.n_bins,
            "parties": list(table.parties),
            "ballots_total": table.ballots_total(),
        },
        "inputs": [digest],
    }


def cmd_peaks(args) -> dict:
    dataset, digest = _load_dataset(args)
    targets = tuple(int(t) for t in _parse_party_list(args.targets)) if args.targets else peaks.DEFAULT_TARGETS
    report = peaks.detect_round_peaks(
        dataset,
        quantity=args.quantity,
        targets=targets,
        replicates=args.replicates,
        seed=args.seed,
        alpha=args.alpha,
        weight_mode=args.weight_mode,
    )
    if not args.no_plots:
        hist = hist_mod.integer_percent_histogram(dataset, args.quantity, args.weight_mode)
        null = peaks.simulate_null(
            dataset, args.quantity, args.replicates, args.seed,
            targets=tuple(range(hist_mod.N_PERCENT_BINS)), weight_mode=args.weight_mode,
        )
        lo = [float(v) for v in _quantile(null.weights, 0.005)]
        hi = [float(v) for v in _quantile(null.weights, 0.995)]
        atomic_write_text(
            Path(args.out) / "peaks.svg",
            svg_histogram(
                hist.bins,
                title=f"{args.quantity}: observed vs null envelope",
                envelope=(lo, hi),
                highlights=report.flagged,
            ),
        )
    return {"results": report.as_dict(), "inputs": [digest]}


def _quantile(matrix, q):
    import numpy as np

    return np.quantile(matrix, q, axis=0)


def cmd_stuffing(args) -> dict:
    dataset, digest = _load_dataset(args)
    table = hist_mod.turnout_bin_table(dataset, args.bin_width)
    estimate = anomaly.estimate_stuffing(table, reference_window=_parse_window(args.window))
    points = scatter.build_points(dataset, dataset.designated_leader, y_mode="share_of_cast")
    results = {"stuffing": estimate.as_dict()}
    try:
        results["superlinearity"] = anomaly.superlinearity_check(points).as_dict()
    except (ForensicsError, ValueError) as exc:
        results["superlinearity"] = {"error": str(exc)}
    return {"results": results, "inputs": [digest]}


def cmd_clusters(args) -> dict:
    dataset, digest = _load_dataset(args)
    points = scatter.build_points(dataset, dataset.designated_leader, y_mode="share_of_cast")
    split = anomaly.split_two_clusters(points, seed=args.seed, restarts=args.restarts)
    if not args.no_plots:
        groups = {0: [], 1: []}
        for point, assignment in zip(points, split.assignments):
            groups[assignment].append((point.x, point.y))
        atomic_write_text(
            Path(args.out) / "clusters.svg",
            svg_scatter(
                [
                    ("cluster 0", groups[0], None),
                    ("cluster 1", groups[1], None),
                ],
                title="turnout vs leader share of cast",
                y_label="leader share of cast",
            ),
        )
    return {"results": split.as_dict(), "inputs": [digest]}


def cmd_contrast(args) -> dict:
    dataset, digest = _load_dataset(args)
    by = args.by
    if by == "machine":
        predicate = lambda r: r.machine_counted
        label_a, label_b = "machine_counted", "hand_counted"
    elif by.startswith("territory="):
        value = by.split("=", 1)[1]
        predicate = lambda r: r.territory == value
        label_a, label_b = f"territory {value}", "rest"
    elif by.startswith("tag="):
        value = by.split("=", 1)[1]
        predicate = lambda r: value in r.tags
        label_a, label_b = f"tag {value}", "rest"
    else:
        raise ForensicsError(f"--by must be machine, territory=<v>, or tag=<v>, got {by!r}")
    part_a, part_b = partition(dataset, predicate)
    if len(part_a) == 0 or len(part_b) == 0:
        raise ForensicsError(f"split {by!r} left an empty subset")
    contrast = compare.subset_contrast(part_a, part_b, label_a=label_a, label_b=label_b)
    return {"results": contrast.as_dict(), "inputs": [digest]}


def cmd_delta(args) -> dict:
    text = _read(args.infile)
    digest = input_digest(args.infile)
    import csv as _csv
    import io as _io

    reader = _csv.reader(_io.StringIO(text))
    header = next(reader)
    expected = ["unit", "share_b", "share_a", "turnout_b", "turnout_a"]
    if [h.strip() for h in header] != expected:
        raise ForensicsError(f"delta input header must be {','.join(expected)}")
    table_a, table_b = [], []
    for row in reader:
        if not row:
            continue
        unit = row[0].strip()
        table_b.append((unit, Decimal(row[1]), Decimal(row[3])))
        table_a.append((unit, Decimal(row[2]), Decimal(row[4])))
    rows = compare.cross_election_delta(table_a, table_b)
    return {"results": {"rows": [r.as_dict() for r in rows]}, "inputs": [digest]}


def cmd_protocol_diff(args) -> dict:
    text = _read(args.infile)
    digest = input_digest(args.infile)
    roster, pairs = compare.parse_protocols(text, args.leader)
    rows, summary = compare.protocol_displacements(pairs, roster, args.leader)
    if not args.no_plots and rows:
        atomic_write_text(
            Path(args.out) / "protocol_diff.svg",
            svg_scatter(
                [
                    ("observer protocol", [r.from_point for r in rows], None),
                    ("official", [r.to_point for r in rows], None),
                ],
                title="observer protocol vs official (turnout, leader share)",
                y_label="leader share of cast",
            ),
        )
    return {
        "results": {
            "pairs": len(rows),
            "mean_d_turnout": summary.mean_d_turnout,
            "mean_d_leader_share": summary.mean_d_leader_share,
            "displacements": [r.as_dict() for r in rows],
        },
        "inputs": [digest],
    }


def cmd_paired_scan(args) -> dict:
    text_a = _read(args.in_a)
    text_b = _read(args.in_b)
    dataset_a = parse_dataset(text_a, args.leader)
    dataset_b = parse_dataset(text_b, args.leader)
    result = compare.paired_contest_scan(
        dataset_a, dataset_b, threshold=args.threshold, party=args.party
    )
    return {
        "results": result.as_dict(),
        "inputs": [input_digest(args.in_a), input_digest(args.in_b)],
    }


def cmd_hyperactive(args) -> dict:
    dataset, digest = _load_dataset(args)
    series_map = dynamics.parse_intraday(_read(args.series))
    report = dynamics.flag_hyperactive(dataset, series_map, threshold=args.threshold)
    if not args.no_plots and report.rows:
        hot = [(r.turnout, r.leader_share_of_cast) for r in report.rows if r.flagged]
        cold = [(r.turnout, r.leader_share_of_cast) for r in report.rows if not r.flagged]
        atomic_write_text(
            Path(args.out) / "hyperactive.svg",
            svg_scatter(
                [("steady", cold, None), ("hyperactive", hot, None)],
                title=f"final-increment flags (threshold {args.threshold})",
                y_label="leader share of cast",
            ),
        )
    return {"results": report.as_dict(), "inputs": [digest, input_digest(args.series)]}


def cmd_synth(args) -> dict:
    model = synth.model_from_json(_read(args.model))
    inputs = [input_digest(args.model)]
    scenario = None
    if args.scenario:
        scenario = synth.scenario_from_json(_read(args.scenario))
        inputs.append(input_digest(args.scenario))
    generated = synth.synthesize(model, scenario, args.seed)
    out = Path(args.out)
    atomic_write_text(out / "precincts.csv", serialize_dataset(generated.dataset))
    atomic_write_text(out / "ground_truth.csv", generated.truth.to_csv())
    if generated.intraday:
        atomic_write_text(out / "intraday.csv", dynamics.serialize_intraday(generated.intraday))
    results = {
        "precincts": len(generated.dataset),
        "parties": list(generated.dataset.roster.ids),
        "total_stuffed": int(generated.truth.stuffed.sum()),
        "total_transferred": int(generated.truth.transferred.sum()),
        "total_rounding_delta": int(generated.truth.rounding_delta.sum()),
        "total_jump": int(generated.truth.jump.sum()),
        "rounding_skipped": list(generated.truth.rounding_skipped),
        "files": ["precincts.csv", "ground_truth.csv"]
        + (["intraday.csv"] if generated.intraday else []),
    }
    return {"results": results, "inputs": inputs}


def cmd_prob(args) -> dict:
    exact = None
    if args.op == "odds":
        res = probkit.posterior_odds(args.values[0], args.values[1], args.values[2], args.values[3])
        decimal, exact = res.decimal, res.odds
        results = {"op": "odds", "decimal": decimal, "favored": res.favored}
    elif args.op == "run":
        frac = probkit.run_probability(args.values[0], int(args.values[1]))
        decimal, exact = float(frac), frac
        results = {"op": "run", "decimal": decimal}
    elif args.op == "coincidence":
        res = probkit.subset_coincidence(
            int(args.values[0]), int(args.values[1]), int(args.values[2])
        )
        decimal, exact = res.decimal, res.probability
        results = {"op": "coincidence", "decimal": decimal}
    elif args.op == "sigma":
        decimal = probkit.proportion_sigma(float(args.values[0]), int(args.values[1]))
        results = {"op": "sigma", "decimal": decimal}
    else:
        raise ForensicsError(f"unknown prob operation {args.op!r}")
    if exact is not None:
        results["exact"] = str(exact)
    line = f"{decimal!r}"
    if args.exact and exact is not None:
        line += f" = {exact}"
    print(line)
    return {"results": results, "inputs": []}


def _add_common_out(sub, plots: bool = True):
    sub.add_argument("--out", required=True, help="output directory for report.json and artifacts")
    if plots:
        sub.add_argument("--no-plots", action="store_true", help="skip SVG output")


def _add_in_leader(sub):
    sub.add_argument("--in", dest="infile", required=True, help="precincts.csv path")
    sub.add_argument("--leader", required=True, help="designated leader party id")


def build_parser() -> _Parser:
    parser = _Parser(prog="ef", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ef {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("validate", help="parse and validate a precincts.csv")
    _add_in_leader(s)
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_validate)

    s = subs.add_parser("scatter", help="turnout/share point clouds with trend fits")
    _add_in_leader(s)
    s.add_argument("--parties", default="", help="comma-separated party ids (default: first 7 + others)")
    s.add_argument("--y-mode", default="share_of_registered", choices=scatter.Y_MODES)
    s.add_argument("--weighting", default="uniform", choices=("uniform", "by_registered"))
    _add_common_out(s)
    s.set_defaults(func=cmd_scatter)

    s = subs.add_parser("hist", help="integer-percent histogram")
    _add_in_leader(s)
    s.add_argument("--quantity", default="leader_share")
    s.add_argument("--weight-mode", default="precincts", choices=hist_mod.WEIGHT_MODES)
    _add_common_out(s)
    s.set_defaults(func=cmd_hist)

    s = subs.add_parser("bins", help="per-party vote mass by turnout bin")
    _add_in_leader(s)
    s.add_argument("--bin-width", type=float, default=0.01)
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_bins)

    s = subs.add_parser("peaks", help="Monte-Carlo round-percent peak detector")
    _add_in_leader(s)
    s.add_argument("--quantity", default="leader_share")
    s.add_argument("--weight-mode", default="precincts", choices=hist_mod.WEIGHT_MODES)
    s.add_argument("--targets", default="", help="comma-separated integer percents")
    s.add_argument("--replicates", type=int, default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--alpha", type=float, default=0.01)
    _add_common_out(s)
    s.set_defaults(func=cmd_peaks)

    s = subs.add_parser("stuffing", help="anomalous-vote estimate from turnout bins")
    _add_in_leader(s)
    s.add_argument("--bin-width", type=float, default=0.01)
    s.add_argument("--window", default="0.15:0.35", help="reference turnout window lo:hi")
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_stuffing)

    s = subs.add_parser("clusters", help="one-vs-two cluster split of (turnout, leader share)")
    _add_in_leader(s)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--restarts", type=int, default=20)
    _add_common_out(s)
    s.set_defaults(func=cmd_clusters)

    s = subs.add_parser("contrast", help="subset contrast (e.g. machine vs hand counted)")
    _add_in_leader(s)
    s.add_argument("--by", default="machine", help="machine | territory=<v> | tag=<v>")
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_contrast)

    s = subs.add_parser("delta", help="cross-election share/turnout deltas")
    s.add_argument("--in", dest="infile", required=True,
                   help="CSV with header unit,share_b,share_a,turnout_b,turnout_a (percent values)")
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_delta)

    s = subs.add_parser("protocol-diff", help="observer protocol vs official displacement")
    s.add_argument("--in", dest="infile", required=True, help="protocols.csv path")
    s.add_argument("--leader", required=True)
    _add_common_out(s)
    s.set_defaults(func=cmd_protocol_diff)

    s = subs.add_parser("paired-scan", help="large per-precinct gaps between two contests")
    s.add_argument("--in-a", required=True, help="precincts.csv for contest A")
    s.add_argument("--in-b", required=True, help="precincts.csv for contest B")
    s.add_argument("--leader", required=True)
    s.add_argument("--party", default=None, help="party to compare (default: leader)")
    s.add_argument("--threshold", type=int, default=300)
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_paired_scan)

    s = subs.add_parser("hyperactive", help="flag precincts with large final turnout jumps")
    _add_in_leader(s)
    s.add_argument("--series", required=True, help="intraday.csv path")
    s.add_argument("--threshold", type=float, default=dynamics.DEFAULT_HYPERACTIVE_THRESHOLD)
    _add_common_out(s)
    s.set_defaults(func=cmd_hyperactive)

    s = subs.add_parser("synth", help="generate a synthetic election (optional fraud scenario)")
    s.add_argument("--model", required=True, help="honest model JSON")
    s.add_argument("--scenario", default=None, help="fraud scenario JSON")
    s.add_argument("--seed", type=int, required=True)
    _add_common_out(s, plots=False)
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("prob", help="probability utilities (odds, run, coincidence, sigma)")
    s.add_argument("op", choices=("odds", "run", "coincidence", "sigma"))
    s.add_argument("values", nargs="+", type=float)
    s.add_argument("--exact", action="store_true", help="also print the exact fraction")
    s.add_argument("--out", default=None, help="optional report directory")
    s.set_defaults(func=cmd_prob)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        payload = args.func(args)
        out_dir = getattr(args, "out", None)
        if out_dir:
            report = build_report(
                command=args.command,
                config=_config(args),
                inputs=payload["inputs"],
                results=payload["results"],
            )
            write_report(out_dir, report)
        return 0
    except ForensicsError as exc:
        print(f"ERROR {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"ERROR INVALID: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR IO: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
