"""Batch command-line interface.

Usage::

    convdyn synth   --out data/ --conversations 300 --seed 7
    convdyn all     --input data/synth_posts.jsonl --out results/
    convdyn wiener  --input tweets.jsonl --format twitter_v2 --sample volume:5

Every option can also be set through an environment variable named
``CONVDYN_<OPTION>`` (for example ``CONVDYN_MIN_SIZE=20``); command-line
flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from . import __version__, _kernels
from .activity import FitError, aggregate_curve, fit_saturation
from .hijack import SCENARIOS, HISTOGRAM_ROWS, classify, takeover_histogram
from .hin import GraphError
from .ingest import (
    Conversation,
    ParseIssue,
    RawPost,
    assemble_stream,
    format_timestamp,
    iter_canonical,
    iter_twitter_v2,
    to_canonical,
)
from .sampler import SamplingPolicy, parse_policy, sample
from .structure import NotATreeError, temporal_wiener, wiener_boxplot
from .synth import TOPOLOGIES, gen_corpus

log = logging.getLogger("convdyn")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_EMPTY = 4
EXIT_INTERNAL = 5

ENV_PREFIX = "CONVDYN_"
SUBCOMMANDS = ("ingest", "activity", "wiener", "hijack", "synth", "all")


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    input_format: str = "canonical"
    sample: SamplingPolicy = field(default_factory=SamplingPolicy.volume)
    min_size: int = 50
    min_use: int = 5
    bins: int = 20
    resolution: float = 1e-5
    out: str = "out"
    seed: int = 0
    jobs: int = 1
    memory_cap: int = 1_000_000
    weighting: str = "uniform"
    conversations: int = 100
    posts: int = 100
    alpha: float = 32.5
    topology: str = "uniform_attach"
    bias: float = 0.0
    hashtags: str = "scripted"

    def echo(self) -> dict:
        """Configuration as recorded in the manifest (output location omitted)."""
        data = {
            "command": self.command,
            "inputs": list(self.inputs),
            "format": self.input_format,
            "sample": str(self.sample),
            "min_size": self.min_size,
            "min_use": self.min_use,
            "bins": self.bins,
            "resolution": self.resolution,
            "seed": self.seed,
            "weighting": self.weighting,
        }
        if self.command == "synth":
            data.update(
                conversations=self.conversations,
                posts=self.posts,
                alpha=self.alpha,
                topology=self.topology,
                bias=self.bias,
                hashtags=self.hashtags,
            )
        return data


# -- argument parsing -------------------------------------------------------


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


def _policy(text: str) -> SamplingPolicy:
    try:
        return parse_policy(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _resolution(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1 or abs(round(1 / value) * value - 1) > 1e-9:
        raise argparse.ArgumentTypeError("resolution must divide 1 evenly, e.g. 1e-5")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--input", action="append", default=None, metavar="PATH",
        help="input JSONL file ('-' for stdin); repeatable",
    )
    common.add_argument(
        "--format", dest="input_format", choices=("canonical", "twitter_v2"),
        default=_env("format", "canonical"),
    )
    common.add_argument(
        "--sample", type=_policy, default=_env("sample", "volume:5"),
        help="volume:K (K posts per snapshot) or time:DURATION (e.g. time:6h)",
    )
    common.add_argument("--min-size", type=_positive_int, default=_env("min_size", "50"))
    common.add_argument("--min-use", type=_positive_int, default=_env("min_use", "5"))
    common.add_argument("--bins", type=_positive_int, default=_env("bins", "20"))
    common.add_argument("--resolution", type=_resolution, default=_env("resolution", "1e-5"))
    common.add_argument("--out", default=_env("out", "out"), help="output directory")
    common.add_argument("--seed", type=int, default=_env("seed", "0"))
    common.add_argument("--jobs", type=_positive_int, default=_env("jobs", "1"))
    common.add_argument(
        "--memory-cap", type=_positive_int, default=_env("memory_cap", "1000000"),
        help="records buffered before grouping spills to disk",
    )
    common.add_argument(
        "--weighting", choices=("uniform", "inverse_variance"),
        default=_env("weighting", "uniform"), help="point weights of the activity fit",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    synth = argparse.ArgumentParser(add_help=False)
    synth.add_argument("--conversations", type=_positive_int, default=_env("conversations", "100"))
    synth.add_argument("--posts", type=_positive_int, default=_env("posts", "100"))
    synth.add_argument("--alpha", type=float, default=_env("alpha", "32.5"))
    synth.add_argument("--topology", choices=TOPOLOGIES, default=_env("topology", "uniform_attach"))
    synth.add_argument("--bias", type=float, default=_env("bias", "0"))
    synth.add_argument(
        "--hashtags", choices=("scripted", "none"), default=_env("hashtags", "scripted"),
        help="attach scripted hijacking scenarios (needs --posts >= 40)",
    )

    parser = argparse.ArgumentParser(
        prog="convdyn", description="Conversation dynamics analyses over reply trees."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "assemble conversations and list them",
        "activity": "completion curve and saturation fit",
        "wiener": "temporal Wiener index series and box-plot summary",
        "hijack": "hashtag hijacking reports and takeover histogram",
        "synth": "write a synthetic corpus in canonical JSONL",
        "all": "ingest, activity, wiener and hijack in one run",
    }
    for name in SUBCOMMANDS:
        parents = [common, synth] if name == "synth" else [common]
        sub.add_parser(name, parents=parents, help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    inputs = args.input
    if inputs is None:
        env_inputs = _env("input", "")
        inputs = [p for p in env_inputs.split(os.pathsep) if p]
    cfg = RunConfig(
        command=args.command,
        inputs=list(inputs),
        input_format=args.input_format,
        sample=args.sample,
        min_size=args.min_size,
        min_use=args.min_use,
        bins=args.bins,
        resolution=args.resolution,
        out=args.out,
        seed=args.seed,
        jobs=args.jobs,
        memory_cap=args.memory_cap,
        weighting=args.weighting,
    )
    if args.command == "synth":
        cfg.conversations = args.conversations
        cfg.posts = args.posts
        cfg.alpha = args.alpha
        cfg.topology = args.topology
        cfg.bias = args.bias
        cfg.hashtags = args.hashtags
        if cfg.alpha <= 0:
            raise CLIError("--alpha must be > 0", EXIT_USAGE)
        if cfg.hashtags == "scripted" and cfg.posts < 40:
            raise CLIError("--hashtags scripted needs --posts >= 40", EXIT_USAGE)
    elif not cfg.inputs:
        raise CLIError(f"{args.command}: --input is required", EXIT_USAGE)
    return cfg


# -- writers ------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ArtifactWriter:
    """Writes artifacts into the output directory and remembers their digests."""

    def __init__(self, out: Path):
        self.out = out
        self.out.mkdir(parents=True, exist_ok=True)
        self.written: dict[str, str] = {}

    def _record(self, name: str) -> None:
        digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        self.written[name] = digest

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        with open(self.out / name, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self._record(name)

    def json(self, name: str, payload) -> None:
        with open(self.out / name, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        self._record(name)

    def jsonl(self, name: str, records: Iterable[dict]) -> None:
        with open(self.out / name, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
        self._record(name)

    def lines(self, name: str, lines: Iterable[str]) -> None:
        with open(self.out / name, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        self._record(name)


# -- pipeline stages ------------------------------------------------------------


def _open_inputs(paths: Sequence[str]) -> Iterator[str]:
    for path in paths:
        if path == "-":
            yield from sys.stdin
            continue
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_INPUT) from None
        with fh:
            try:
                yield from fh
            except UnicodeDecodeError as exc:
                raise CLIError(f"{path} is not UTF-8: {exc}", EXIT_INPUT) from None


def load_conversations(cfg: RunConfig, counts: dict) -> list[Conversation]:
    for path in cfg.inputs:
        if path != "-" and not os.path.isfile(path):
            raise CLIError(f"input not found: {path}", EXIT_INPUT)
    issues: list[ParseIssue] = []
    reader = iter_twitter_v2 if cfg.input_format == "twitter_v2" else iter_canonical
    posts = reader(_open_inputs(cfg.inputs), issues)
    convs, stats = assemble_stream(posts, cfg.min_size, cfg.memory_cap)
    counts["parse_issues"] = len(issues)
    counts["assembly"] = stats.as_dict()
    if stats.records == 0:
        raise CLIError("no readable post records in input", EXIT_INPUT)
    if not convs:
        raise CLIError(
            f"no conversation with at least {cfg.min_size} posts survived filtering", EXIT_EMPTY
        )
    return convs


def _map(fn: Callable, items: Sequence, jobs: int, *extra) -> list:
    if jobs <= 1 or len(items) < 2:
        return [fn(item, *extra) for item in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, *[[e] * len(items) for e in extra], chunksize=chunk))


def run_ingest(cfg: RunConfig, convs: list[Conversation], w: ArtifactWriter, counts: dict) -> None:
    rows = (
        (
            c.conversation_id, c.seed_id, c.n_posts, len(c.hashtags()),
            format_timestamp(c.t_first), format_timestamp(c.t_last), ";".join(sorted(c.flags)),
        )
        for c in convs
    )
    w.csv(
        "conversations.csv",
        ("conversation_id", "seed_id", "n_posts", "n_hashtags", "t_first", "t_last", "flags"),
        rows,
    )
    counts["conversations"] = len(convs)


def run_activity(cfg: RunConfig, convs: list[Conversation], w: ArtifactWriter, counts: dict) -> None:
    try:
        curve = aggregate_curve(convs, cfg.resolution)
    except ValueError as exc:
        raise CLIError(f"activity: {exc}", EXIT_EMPTY) from None
    w.csv(
        "activity_curve.csv",
        ("lambda_time", "mean", "sd", "n"),
        zip(curve.lambda_time.tolist(), curve.mean.tolist(), curve.sd.tolist(), curve.n.tolist()),
    )
    fit = fit_saturation(curve, weighting=cfg.weighting)
    w.json("activity_fit.json", fit.as_dict())
    counts["activity"] = {"conversations": curve.n_conversations, "skipped": curve.skipped}


def _wiener_job(conv: Conversation, policy: SamplingPolicy):
    try:
        return temporal_wiener(sample(conv, policy))
    except NotATreeError as exc:
        return str(exc)


def run_wiener(cfg: RunConfig, convs: list[Conversation], w: ArtifactWriter, counts: dict) -> None:
    results = _map(_wiener_job, convs, cfg.jobs, cfg.sample)
    series = [r for r in results if not isinstance(r, str)]
    for r in results:
        if isinstance(r, str):
            log.warning("wiener: skipping %s", r)
    w.csv(
        "wiener_series.csv",
        ("conversation_id", "completion_rate", "wiener"),
        ((s.conversation_id, rate, value) for s in series for rate, value in s),
    )
    boxes = wiener_boxplot(series, cfg.bins)
    w.csv(
        "wiener_summary.csv",
        ("bin_lo", "bin_hi", "n", "mean", "q1", "median", "q3", "whisker_lo", "whisker_hi", "min", "max"),
        (
            (b.bin_lo, b.bin_hi, b.n, b.mean, b.q1, b.median, b.q3, b.whisker_lo, b.whisker_hi, b.minimum, b.maximum)
            for b in boxes
        ),
    )
    counts["wiener"] = {"series": len(series), "skipped_non_tree": len(results) - len(series)}


def _hijack_job(conv: Conversation, policy: SamplingPolicy, min_use: int):
    return classify(conv, sample(conv, policy), min_use)


def run_hijack(cfg: RunConfig, convs: list[Conversation], w: ArtifactWriter, counts: dict) -> str:
    reports = _map(_hijack_job, convs, cfg.jobs, cfg.sample, cfg.min_use)
    w.jsonl("hijack_reports.jsonl", (r.as_dict() for r in reports))
    hist = takeover_histogram(reports, cfg.bins)
    w.csv(
        "takeover_histogram.csv",
        ("row", "bin_lo", "bin_hi", "probability"),
        (
            (row, float(hist.edges[b]), float(hist.edges[b + 1]), float(hist.rows[row][b]))
            for row in HISTOGRAM_ROWS
            for b in range(hist.bins)
        ),
    )
    tally = {s: 0 for s in SCENARIOS}
    for r in reports:
        tally[r.scenario] += 1
    n_eligible = len(reports) - tally["ineligible"]
    proportions = {
        s: (tally[s] / n_eligible if n_eligible else 0.0)
        for s in SCENARIOS if s != "ineligible"
    }
    summary = {
        "conversations": len(reports),
        "eligible": n_eligible,
        "counts": tally,
        "proportions_of_eligible": proportions,
        "histogram_events": dict(hist.counts),
        "empty_histogram_rows": hist.empty_rows,
    }
    w.json("hijack_summary.json", summary)
    counts["hijack"] = {"eligible": n_eligible, "counts": tally}
    return (
        f"hijack: {n_eligible} eligible of {len(reports)}; "
        + ", ".join(f"{s}={tally[s]} ({proportions[s]:.1%})" for s in proportions)
    )


def run_synth(cfg: RunConfig, w: ArtifactWriter, counts: dict) -> None:
    posts: list[RawPost] = gen_corpus(
        cfg.conversations, cfg.posts, cfg.alpha, cfg.topology, cfg.bias, cfg.seed,
        scripted_hashtags=cfg.hashtags == "scripted",
    )
    w.lines("synth_posts.jsonl", (to_canonical(p) for p in posts))
    counts["synth"] = {"conversations": cfg.conversations, "posts": len(posts)}


def execute(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    try:
        w = ArtifactWriter(out)
    except OSError as exc:
        raise CLIError(f"cannot create output directory {out}: {exc.strerror}", EXIT_INPUT) from None
    counts: dict = {}
    timings: dict[str, float] = {}
    summary_lines = []

    def timed(stage: str, fn, *args):
        t0 = time.perf_counter()
        result = fn(*args)
        timings[stage] = round(time.perf_counter() - t0, 6)
        return result

    if cfg.command == "synth":
        timed("synth", run_synth, cfg, w, counts)
    else:
        convs = timed("ingest", load_conversations, cfg, counts)
        if cfg.command in ("ingest", "all"):
            timed("ingest_write", run_ingest, cfg, convs, w, counts)
        else:
            counts["conversations"] = len(convs)
        if cfg.command in ("activity", "all"):
            timed("activity", run_activity, cfg, convs, w, counts)
        if cfg.command in ("wiener", "all"):
            timed("wiener", run_wiener, cfg, convs, w, counts)
        if cfg.command in ("hijack", "all"):
            summary_lines.append(timed("hijack", run_hijack, cfg, convs, w, counts))

    manifest = {
        "tool": "convdyn",
        "version": __version__,
        "config": cfg.echo(),
        "counts": counts,
        "artifacts": dict(sorted(w.written.items())),
    }
    w.json("manifest.json", manifest)
    # Wall-clock timings vary between runs; kept apart so manifest.json is reproducible.
    with open(out / "timings.json", "w", encoding="utf-8") as fh:
        json.dump({"kernel_backend": _kernels.BACKEND, "seconds": timings}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for line in summary_lines:
        print(line)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        return execute(cfg)
    except CLIError as exc:
        print(f"convdyn: error: {exc}", file=sys.stderr)
        return exc.code
    except (GraphError, FitError, AssertionError) as exc:
        print(f"convdyn: internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
