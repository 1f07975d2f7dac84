"""Command-line interface.

Subcommands: ingest, metrics, attack, tempo, sweep, frontier, robustness,
synth. Every subcommand is a deterministic function of its input files and
flags: reruns produce byte-identical outputs. Tabular results are CSV,
summaries are JSON; numbers in reports are written with 9 significant
digits and every output file ends with a newline.

Exit codes: 0 on success, 1 on validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from yumalab._util import format_timestamp, parse_timestamp
from yumalab.consensus import BondState, Delegation, run_tempo
from yumalab.ingest import (
    DTAO_CUTOFF,
    FREQUENCIES,
    Dataset,
    apply_cutoff,
    history_snapshots,
    load_events,
    resample,
    save_events,
)
from yumalab.interventions import TransformSpec
from yumalab.metrics import (
    ROLE_FILTERS,
    concentration_report,
    coalition_fraction,
    correlation_profile,
)
from yumalab.model import EmissionParams, Role, ValidationError, WeightMatrix
from yumalab.sweep import (
    SCHEMES,
    default_frontier_specs,
    sweep_scheme,
    temporal_robustness,
    tradeoff_frontier,
)
from yumalab.synth import SynthConfig, generate

DEFAULT_CUTOFF_TEXT = "2025-02-13T00:00:00Z"

SWEEP_COLUMNS = ("scheme", "param", "netuid", "role", "r_sr", "r_pr", "d_r_sr", "d_r_pr")

CONCENTRATION_COLUMNS = (
    "netuid",
    "role_filter",
    "n_wallets",
    "gini_stake",
    "gini_reward",
    "hhi_stake",
    "hhi_reward",
    "top1_stake_share",
    "top1_reward_share",
)

_METRIC_FIELDS = ("gini", "hhi", "top1")
_RESOURCES = ("stake", "reward")


@dataclass(frozen=True)
class RunConfig:
    """Validated common settings of one CLI invocation."""

    inputs: tuple[str, ...]
    out_dir: str
    format: Optional[str]
    cutoff: Optional[datetime]
    freq: str = "daily"
    scheme: Optional[str] = None
    grid: Optional[tuple[float, ...]] = None
    seed: int = 0


# ---------------------------------------------------------------------------
# Formatting and file helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    """CSV cell: 9 significant digits for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _round9(value):
    """JSON payload value: floats reduced to 9 significant digits."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return value
        return float(format(value, ".9g"))
    if isinstance(value, dict):
        return {key: _round9(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round9(item) for item in value]
    return value


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_round9(payload), handle, indent=2)
        handle.write("\n")


def _parse_cutoff(text: str) -> Optional[datetime]:
    if text.strip().lower() in ("none", "off"):
        return None
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _run_config(args: argparse.Namespace) -> RunConfig:
    out_dir = getattr(args, "out", None) or "."
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ValidationError(f"output directory {out_dir!r} is not writable")
    grid_text = getattr(args, "grid", None)
    grid = None
    if grid_text:
        try:
            grid = tuple(float(part) for part in grid_text.split(","))
        except ValueError:
            raise ValidationError(f"invalid grid {grid_text!r}; expected comma-separated numbers") from None
    return RunConfig(
        inputs=tuple(getattr(args, "input", None) or ()),
        out_dir=out_dir,
        format=getattr(args, "format", None),
        cutoff=_parse_cutoff(getattr(args, "cutoff", DEFAULT_CUTOFF_TEXT)),
        freq=getattr(args, "freq", None) or "daily",
        scheme=getattr(args, "scheme", None),
        grid=grid,
        seed=int(getattr(args, "seed", 0) or 0),
    )


def _load_dataset(config: RunConfig) -> Dataset:
    if not config.inputs:
        raise ValidationError("at least one --input file is required")
    events = []
    for path in config.inputs:
        if not os.path.exists(path):
            raise ValidationError(f"input file not found: {path}")
        # Infer the input format from the extension; --format is the output
        # format and only disambiguates inputs with unrecognized suffixes.
        suffix = os.path.splitext(path)[1].lower()
        fmt = None if suffix in (".jsonl", ".csv") else config.format
        events.extend(load_events(path, format=fmt).events)
    dataset = Dataset.from_events(events)
    if config.cutoff is not None:
        dataset = apply_cutoff(dataset, config.cutoff)
    if not dataset.events:
        raise ValidationError("no events remain after parsing and cutoff")
    return dataset


def _out(config: RunConfig, name: str) -> str:
    return os.path.join(config.out_dir, name)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_dataset(config)
    out_format = config.format or "jsonl"
    events_path = _out(config, f"events.{'csv' if out_format == 'csv' else 'jsonl'}")
    save_events(dataset.events, events_path, format=out_format)
    pairs = {(event.wallet, event.netuid) for event in dataset.events}
    summary = {
        "events": len(dataset.events),
        "wallets": len(pairs),
        "netuids": dataset.netuids(),
        "first_event": format_timestamp(dataset.events[0].timestamp),
        "last_event": format_timestamp(max(e.timestamp for e in dataset.events)),
        "cutoff": format_timestamp(config.cutoff) if config.cutoff else None,
        "events_file": os.path.basename(events_path),
    }
    _write_json(_out(config, "ingest_summary.json"), summary)
    return 0


def _report_row(report) -> tuple:
    return (
        report.netuid,
        report.role_filter,
        report.n_wallets,
        report.gini_stake,
        report.gini_reward,
        report.hhi_stake,
        report.hhi_reward,
        report.top1_stake_share,
        report.top1_reward_share,
    )


def _metric_value(report, metric: str, resource: str) -> Optional[float]:
    field = {"gini": "gini", "hhi": "hhi", "top1": "top1"}[metric]
    suffix = "_share" if metric == "top1" else ""
    return getattr(report, f"{field}_{resource}{suffix}")


def _summary_rows(variant: str, reports) -> list[tuple]:
    rows = []
    for role_filter in ROLE_FILTERS:
        for resource in _RESOURCES:
            for metric in _METRIC_FIELDS:
                values = [
                    value
                    for report in reports
                    if report.role_filter == role_filter
                    and (value := _metric_value(report, metric, resource)) is not None
                ]
                if values:
                    arr = np.asarray(values, dtype=np.float64)
                    stats = (
                        float(np.mean(arr)),
                        float(np.median(arr)),
                        float(np.min(arr)),
                        float(np.max(arr)),
                    )
                else:
                    stats = (None, None, None, None)
                rows.append((variant, role_filter, resource, metric) + stats)
    return rows


def _cmd_metrics(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_dataset(config)
    history = history_snapshots(dataset)

    history_reports = [
        concentration_report(snap, role_filter)
        for snap in history
        for role_filter in ROLE_FILTERS
    ]
    _write_csv(
        _out(config, "concentration.csv"),
        CONCENTRATION_COLUMNS,
        (_report_row(report) for report in history_reports),
    )

    # Per-window reports averaged per (netuid, role_filter) at the chosen
    # frequency; windows where a metric is undefined are skipped.
    window_reports: dict[tuple[int, str], list] = {}
    for snap in resample(dataset, config.freq):
        for role_filter in ROLE_FILTERS:
            window_reports.setdefault((snap.netuid, role_filter), []).append(
                concentration_report(snap, role_filter)
            )
    mean_rows = []
    for (netuid, role_filter) in sorted(window_reports):
        group = window_reports[(netuid, role_filter)]
        cells: list = [netuid, role_filter, len(group)]
        for metric, resource in (
            ("gini", "stake"),
            ("gini", "reward"),
            ("hhi", "stake"),
            ("hhi", "reward"),
            ("top1", "stake"),
            ("top1", "reward"),
        ):
            values = [
                value
                for report in group
                if (value := _metric_value(report, metric, resource)) is not None
            ]
            cells.append(float(np.mean(values)) if values else None)
        mean_rows.append(tuple(cells))
    _write_csv(
        _out(config, "concentration_snapshot_mean.csv"),
        ("netuid", "role_filter", "n_windows") + CONCENTRATION_COLUMNS[3:],
        mean_rows,
    )

    summary_rows = _summary_rows("history", history_reports)
    snapshot_reports = [report for group in window_reports.values() for report in group]
    summary_rows.extend(_summary_rows(f"snapshot_{config.freq}", snapshot_reports))
    _write_csv(
        _out(config, "concentration_summary.csv"),
        ("variant", "role_filter", "resource", "metric", "mean", "median", "min", "max"),
        summary_rows,
    )

    correlation_rows = []
    for snap in history:
        for role in (Role.MINER, Role.VALIDATOR):
            if snap.count(role) < 2:
                continue
            profile = correlation_profile(snap, role)
            correlation_rows.append(
                (
                    profile.netuid,
                    role.value,
                    profile.n_wallets,
                    profile.r_sr,
                    profile.r_sp,
                    profile.r_pr,
                )
            )
    _write_csv(
        _out(config, "correlations.csv"),
        ("netuid", "role", "n_wallets", "r_sr", "r_sp", "r_pr"),
        correlation_rows,
    )
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_dataset(config)
    threshold = float(args.threshold)
    rows = []
    for snap in history_snapshots(dataset):
        stakes = snap.stakes()
        if float(np.sum(stakes)) <= 0.0:
            continue
        rows.append((snap.netuid, snap.count(), coalition_fraction(stakes, threshold)))
    _write_csv(_out(config, "coalition.csv"), ("netuid", "n_wallets", "coalition_fraction"), rows)
    return 0


def _tempo_instance(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except FileNotFoundError:
        raise ValidationError(f"input file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    try:
        validators = tuple((str(v["id"]), float(v["stake"])) for v in payload["validators"])
        miners = tuple(str(m) for m in payload["miners"])
        weights = np.asarray(payload["weights"], dtype=np.float64)
        params_obj = payload.get("params", {})
        params = EmissionParams(
            alpha=float(params_obj.get("alpha", 0.1)),
            beta=float(params_obj.get("beta", 0.5)),
            kappa=float(params_obj.get("kappa", 0.5)),
            tempo_blocks=int(params_obj.get("tempo_blocks", 360)),
        )
        block_emission = float(payload["block_emission"])
        delegations = tuple(
            Delegation(
                validator_id=str(d["validator_id"]),
                delegator_id=str(d["delegator_id"]),
                amount=float(d["amount"]),
                take=float(d["take"]),
            )
            for d in payload.get("delegations", ())
        )
        tempos = int(payload.get("tempos", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed tempo instance {path}: {exc!r}") from None
    wm = WeightMatrix(validators=validators, miners=miners, weights=weights)
    if "bonds" in payload:
        bonds = BondState(
            bonds=np.asarray(payload["bonds"], dtype=np.float64),
            tempo_index=int(payload.get("tempo_index", 0)),
        )
    else:
        bonds = BondState.initial(wm.n_validators, wm.n_miners)
    if tempos < 1:
        raise ValidationError("tempos must be >= 1")
    return wm, bonds, params, block_emission, delegations, tempos


def _cmd_tempo(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if len(config.inputs) != 1:
        raise ValidationError("tempo expects exactly one --input instance file")
    wm, bonds, params, block_emission, delegations, tempos = _tempo_instance(config.inputs[0])
    outcome = None
    for _ in range(tempos):
        outcome = run_tempo(wm, bonds, params, block_emission, delegations)
        bonds = BondState(bonds=outcome.bonds, tempo_index=outcome.tempo_index)
    payload = {
        "block_emission": outcome.block_emission,
        "owner_amount": outcome.owner_amount,
        "no_ranking_mass": outcome.no_ranking_mass,
        "tempo_index": outcome.tempo_index,
        "miner_shares": outcome.miner_shares,
        "validator_shares": outcome.validator_shares,
        "miner_tao": outcome.miner_tao,
        "validator_tao": outcome.validator_tao,
        "delegator_rewards": outcome.delegator_rewards,
        "bonds": outcome.bonds.tolist(),
    }
    _write_json(_out(config, "emission.json"), payload)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if not config.scheme:
        raise ValidationError("--scheme is required for sweep")
    dataset = _load_dataset(config)
    result = sweep_scheme(history_snapshots(dataset), config.scheme, grid=config.grid)
    _write_csv(
        _out(config, "sweep.csv"),
        SWEEP_COLUMNS,
        (
            (p.scheme, p.param, p.netuid, p.role.value, p.r_sr, p.r_pr, p.d_r_sr, p.d_r_pr)
            for p in result.per_point
        ),
    )
    summary = {
        "scheme": result.scheme,
        "grid": list(result.grid),
        "aggregates": [
            {
                "param": agg.param,
                "role": agg.role.value,
                "n_subnets": agg.n_subnets,
                "excluded": agg.excluded,
                "mean_d_r_sr": agg.mean_d_r_sr,
                "median_d_r_sr": agg.median_d_r_sr,
                "mean_d_r_pr": agg.mean_d_r_pr,
                "median_d_r_pr": agg.median_d_r_pr,
            }
            for agg in result.aggregates
        ],
    }
    _write_json(_out(config, "sweep_summary.json"), summary)
    return 0


def _transform_from_args(args: argparse.Namespace, default_kind: Optional[str] = None) -> Optional[TransformSpec]:
    kind = getattr(args, "transform", None) or default_kind
    if kind is None:
        return None
    param = getattr(args, "param", None)
    if kind == "cap":
        if param is None:
            raise ValidationError("--param (cap percentile) is required for the cap transform")
        return TransformSpec(kind="cap", cap_percentile=float(param))
    if kind == "power":
        if param is None:
            raise ValidationError("--param (exponent) is required for the power transform")
        return TransformSpec(kind="power", power_exponent=float(param))
    if kind == "log":
        return TransformSpec(kind="log")
    raise ValidationError(f"unknown transform {kind!r}")


def _cmd_frontier(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_dataset(config)
    chosen = _transform_from_args(args)
    if chosen is None:
        specs = default_frontier_specs()
    else:
        identity = TransformSpec(kind="cap", cap_percentile=100.0)
        specs = (identity, chosen) if chosen != identity else (identity,)
    threshold = float(args.threshold)
    points = tradeoff_frontier(history_snapshots(dataset), specs, threshold=threshold)
    _write_csv(
        _out(config, "frontier.csv"),
        (
            "label",
            "kind",
            "param",
            "n_subnets",
            "median_coalition_fraction",
            "median_whale_penalty",
            "pareto",
        ),
        (
            (
                p.label,
                p.kind,
                p.param,
                p.n_subnets,
                p.median_coalition_fraction,
                p.median_whale_penalty,
                p.pareto,
            )
            for p in points
        ),
    )
    payload = {
        "threshold": threshold,
        "points": [
            {
                "label": p.label,
                "kind": p.kind,
                "param": p.param,
                "n_subnets": p.n_subnets,
                "median_coalition_fraction": p.median_coalition_fraction,
                "median_whale_penalty": p.median_whale_penalty,
                "pareto": p.pareto,
            }
            for p in points
        ],
    }
    _write_json(_out(config, "frontier.json"), payload)
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_dataset(config)
    spec = _transform_from_args(args, default_kind="cap")
    freqs = (args.freq,) if getattr(args, "freq", None) else FREQUENCIES
    threshold = float(args.threshold)
    series = temporal_robustness(dataset, spec, freqs=freqs, threshold=threshold)
    rows = []
    for entry in series:
        for window in entry.windows:
            rows.append(
                (
                    entry.freq,
                    format_timestamp(window.window_start),
                    window.n_subnets,
                    window.median,
                    window.p10,
                    window.p90,
                    window.baseline_median,
                    window.baseline_p10,
                    window.baseline_p90,
                )
            )
    _write_csv(
        _out(config, "robustness.csv"),
        (
            "freq",
            "window_start",
            "n_subnets",
            "median",
            "p10",
            "p90",
            "baseline_median",
            "baseline_p10",
            "baseline_p90",
        ),
        rows,
    )
    payload = {
        "transform": spec.label,
        "threshold": threshold,
        "series": [
            {
                "freq": entry.freq,
                "windows": [
                    {
                        "window_start": format_timestamp(window.window_start),
                        "n_subnets": window.n_subnets,
                        "median": window.median,
                        "p10": window.p10,
                        "p90": window.p90,
                        "baseline_median": window.baseline_median,
                        "baseline_p10": window.baseline_p10,
                        "baseline_p90": window.baseline_p90,
                    }
                    for window in entry.windows
                ],
            }
            for entry in series
        ],
    }
    _write_json(_out(config, "robustness.json"), payload)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = SynthConfig(
        n_subnets=args.subnets,
        wallets_per_subnet=args.wallets,
        validator_fraction=args.validator_fraction,
        stake_law=args.stake_law,
        perf_law=args.perf_law,
        stake_perf_coupling=args.coupling,
        reward_rule=args.reward_rule,
        seed=config.seed,
        span_days=args.days,
        start=args.start,
    )
    dataset = generate(cfg)
    out_format = config.format or "jsonl"
    path = _out(config, f"synth.{'csv' if out_format == 'csv' else 'jsonl'}")
    save_events(dataset.events, path, format=out_format)
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def _add_io_flags(parser: argparse.ArgumentParser, with_input: bool = True) -> None:
    if with_input:
        parser.add_argument(
            "--input",
            action="extend",
            nargs="+",
            metavar="PATH",
            help="input event file(s); format inferred from the extension unless --format is given",
        )
    parser.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    parser.add_argument("--format", choices=("jsonl", "csv"), help="event file format")


def _add_cutoff_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--cutoff",
        default=DEFAULT_CUTOFF_TEXT,
        metavar="ISO8601",
        help=f"exclude events at or after this instant (default {DEFAULT_CUTOFF_TEXT}; 'none' disables)",
    )


def _add_threshold_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threshold",
        type=float,
        default=0.51,
        help="coalition control threshold (default 0.51)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yumalab",
        description="Pre-dTAO Bittensor emission simulation and decentralization analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate, and re-serialize event files")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("metrics", help="concentration and correlation reports")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    p.add_argument("--freq", choices=FREQUENCIES, default="daily", help="snapshot frequency for the per-window variant")
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("attack", help="51%%-coalition fractions per subnet")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    _add_threshold_flag(p)
    p.set_defaults(handler=_cmd_attack)

    p = sub.add_parser("tempo", help="run the emission pipeline on a JSON instance")
    _add_io_flags(p)
    p.set_defaults(handler=_cmd_tempo)

    p = sub.add_parser("sweep", help="reward-scheme correlation sweeps")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--grid", metavar="LIST", help="comma-separated parameter grid (must include the null value)")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("frontier", help="security vs whale-penalty frontier")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    _add_threshold_flag(p)
    p.add_argument("--transform", choices=("cap", "power", "log"), help="score a single transform instead of the default ladder")
    p.add_argument("--param", type=float, help="transform parameter (cap percentile or power exponent)")
    p.set_defaults(handler=_cmd_frontier)

    p = sub.add_parser("robustness", help="coalition-fraction time series under a transform")
    _add_io_flags(p)
    _add_cutoff_flag(p)
    _add_threshold_flag(p)
    p.add_argument("--transform", choices=("cap", "power", "log"), default="cap")
    p.add_argument("--param", type=float, default=88.0, help="transform parameter (default: 88th-percentile cap)")
    p.add_argument("--freq", choices=FREQUENCIES, help="restrict to one frequency (default: all three)")
    p.set_defaults(handler=_cmd_robustness)

    p = sub.add_parser("synth", help="generate a synthetic event dataset")
    _add_io_flags(p, with_input=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subnets", type=int, default=4)
    p.add_argument("--wallets", type=int, default=50)
    p.add_argument("--validator-fraction", type=float, default=0.2, dest="validator_fraction")
    p.add_argument("--stake-law", default="pareto:1.2", dest="stake_law")
    p.add_argument("--perf-law", default="beta:2,5", dest="perf_law")
    p.add_argument("--coupling", type=float, default=0.0, help="stake-perf rank coupling in [-1, 1]")
    p.add_argument("--reward-rule", choices=("stake_proportional", "yuma_replay"), default="stake_proportional", dest="reward_rule")
    p.add_argument("--days", type=int, default=90, help="span in days (daily events)")
    p.add_argument("--start", default="2024-01-01T00:00:00Z", help="first event timestamp")
    p.set_defaults(handler=_cmd_synth)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
