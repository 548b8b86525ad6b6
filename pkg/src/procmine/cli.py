"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error (parse or validation).
Data goes to files or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compare as cmp
from . import discovery, performance, preprocess, social, synthgen
from .durations import MS_PER_SECOND, humanize
from .errors import GenerationError, ParameterError, ParseError, ValidationError
from .ingest import ColumnMapping, read_log, write_log
from .log import case_duration, summarize

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def _mapping(args) -> ColumnMapping | None:
    return ColumnMapping.load(args.mapping) if args.mapping else None


def _read(path, args):
    return read_log(path, _mapping(args))


def cmd_convert(args) -> None:
    log = _read(args.input, args)
    write_log(log, args.out, _mapping(args))


def cmd_preprocess(args) -> None:
    config = preprocess.PipelineConfig.load(args.pipeline)
    preprocess.validate(config)
    log = _read(args.input, args)
    log, reports = preprocess.run_pipeline(log, config)
    write_log(log, args.out, _mapping(args))
    metrics = args.metrics or str(Path(args.out).with_suffix(".steps.json"))
    Path(metrics).write_bytes(_json_bytes({"steps": [r.to_dict() for r in reports]}))


def cmd_discover(args) -> None:
    log = _read(args.input, args)
    graph = discovery.discover_dfg(log, threads=args.threads)
    graph = discovery.filter_edges_min_cases(graph, args.min_edge_cases)
    dot = discovery.export_dot(graph, show_durations=not args.no_durations, duration_stat=args.duration_stat)
    if args.dot:
        Path(args.dot).write_bytes(dot)
    if args.metrics:
        Path(args.metrics).write_bytes(_json_bytes(graph.to_dict()))
    if args.figure:
        from . import plots

        plots.edge_frequency_bars(graph, args.figure)
    if not args.dot and not args.metrics:
        _emit(dot, None)


def _stats_payload(log, stage):
    summary = summarize(log)
    payload = {
        "summary": summary.to_dict(),
        "case_duration": None if not len(log) else performance.case_duration_stats(log).to_dict(),
        "loops": performance.loop_rows_to_dicts(performance.loop_report(log)),
    }
    if stage is not None:
        stats, excluded = performance.stage_duration_stats(log, stage)
        payload["stage"] = {
            "spec": stage.to_dict(),
            "stats": None if stats is None else stats.to_dict(),
            "excluded": excluded,
        }
    return payload


def _stats_text(payload) -> str:
    s = payload["summary"]
    lines = [
        f"cases: {s['case_count']}",
        f"events: {s['event_count']}",
        f"event classes: {len(s['event_class_counts'])}",
        f"resources: {len(s['resource_counts'])}",
        f"first event: {s['first_timestamp'] or 'n/a'}",
        f"last event: {s['last_timestamp'] or 'n/a'}",
    ]
    cd = payload["case_duration"]
    if cd:
        lines.append(f"case duration: mean {humanize(cd['mean_ms'])}, median {humanize(cd['median_ms'])}, "
                     f"min {humanize(cd['min_ms'])}, max {humanize(cd['max_ms'])}")
    else:
        lines.append("case duration: n/a")
    if "stage" in payload:
        st = payload["stage"]
        if st["stats"]:
            lines.append(f"stage: {st['stats']['count']} cases, mean {humanize(st['stats']['mean_ms'])}, "
                         f"median {humanize(st['stats']['median_ms'])}, excluded {st['excluded']}")
        else:
            lines.append(f"stage: n/a, excluded {st['excluded']}")
    lines.append("loops:")
    if not payload["loops"]:
        lines.append("  (none)")
    for row in payload["loops"]:
        lines.append(f"  {row['activity']}: {row['total_repeat_instances']} repeats in {row['cases_with_repeats']} cases")
    return "\n".join(lines) + "\n"


def cmd_stats(args) -> None:
    stage = performance.StageSpec.load(args.stage) if args.stage else None
    log = _read(args.input, args)
    payload = _stats_payload(log, stage)
    data = _json_bytes(payload) if args.format == "json" else _stats_text(payload).encode("utf-8")
    _emit(data, args.out)
    if args.figure:
        from . import plots

        plots.case_duration_histogram([case_duration(c) for c in log], args.figure)


def cmd_social(args) -> None:
    log = _read(args.input, args)
    network = social.mine_handover(log, include_self=not args.exclude_self, threads=args.threads)
    rows = social.involvement_table(network)
    if args.dot:
        Path(args.dot).write_bytes(social.export_handover_dot(network))
    if args.format == "json":
        data = _json_bytes({"involvement": social.involvement_to_dicts(rows), "network": network.to_dict()})
    else:
        data = social.involvement_text(rows).encode("utf-8")
    _emit(data, args.out)
    if args.figure:
        from . import plots

        plots.involvement_bars(rows, args.figure)


def cmd_compare(args) -> None:
    stage = performance.StageSpec.load(args.stage)
    if args.session_bucket_seconds <= 0:
        raise UsageError("--session-bucket-seconds must be positive")
    log_a, log_b = _read(args.a, args), _read(args.b, args)
    report = cmp.compare_stage(
        log_a,
        log_b,
        stage,
        label_a=args.label_a or Path(args.a).stem,
        label_b=args.label_b or Path(args.b).stem,
        session_activity=args.sessions,
        session_bucket_ms=round(args.session_bucket_seconds * MS_PER_SECOND),
    )
    _emit(cmp.render_report(report, args.format), args.out)
    if args.figure:
        from . import plots

        plots.cohort_bars(report, args.figure)


def cmd_generate(args) -> None:
    spec = synthgen.GeneratorSpec.load(args.spec) if args.spec else synthgen.demo_spec()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.cases is not None:
        changes["case_count"] = args.cases
    spec = spec.with_changes(**changes)
    log = synthgen.generate(spec, threads=args.threads)
    write_log(log, args.out, _mapping(args))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, allow_abbrev=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads for per-case work (output is unaffected)")
    common.add_argument("--mapping", help="CSV column mapping (JSON)")

    parser = _Parser(prog="procmine", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    p = add("convert", cmd_convert, "convert between CSV and XES")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("preprocess", cmd_preprocess, "run a cleaning pipeline")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pipeline", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="step reports JSON (default: <out>.steps.json)")

    p = add("discover", cmd_discover, "discover a directly-follows graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--min-edge-cases", type=int, default=0, help="drop edges seen in this many cases or fewer")
    p.add_argument("--dot")
    p.add_argument("--metrics", help="graph metrics JSON")
    p.add_argument("--duration-stat", choices=("mean", "median"), default="mean")
    p.add_argument("--no-durations", action="store_true")
    p.add_argument("--figure", help="edge-frequency chart (png/svg/pdf)")

    p = add("stats", cmd_stats, "log summary, case durations, loops, stage time")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--stage")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.add_argument("--figure", help="case-duration histogram (png/svg/pdf)")

    p = add("social", cmd_social, "handover-of-work network and involvement table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dot")
    p.add_argument("--exclude-self", action="store_true", help="drop self-handovers")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.add_argument("--figure", help="involvement bar chart (png/svg/pdf)")

    p = add("compare", cmd_compare, "compare stage time and sessions of two cohorts")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--stage", required=True)
    p.add_argument("--sessions", help="activity counted as a session")
    p.add_argument("--session-bucket-seconds", type=float, default=cmp.DEFAULT_SESSION_BUCKET_MS / MS_PER_SECOND)
    p.add_argument("--label-a")
    p.add_argument("--label-b")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.add_argument("--figure", help="stage-time chart (png/svg/pdf)")

    p = add("generate", cmd_generate, "generate a synthetic log")
    p.add_argument("--spec", help="generator spec JSON (default: shipped demo scenario)")
    p.add_argument("--seed", type=int)
    p.add_argument("--cases", type=int)
    p.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        args.func(args)
    except UsageError as exc:
        print(f"procmine: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"procmine: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, GenerationError, ParameterError, json.JSONDecodeError) as exc:
        print(f"procmine: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
