"""Command-line front end.

Exit codes: 0 success, 1 usage problems, 2 bad data (always for build-index
and stats; for rescore only under --strict, otherwise bad conversations are
skipped with a warning).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .errors import IntentLatticeError
from .index import IndexTransducer, compile_index, load_index, serialize_index
from .library import IntentLibrary
from .pipeline import DEFAULT_MIN_SPAN, ConversationOutput, rescore_to_records
from .stats import summarize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    # argparse reserves 2 for usage errors; this tool uses 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"))


def cmd_build_index(args) -> int:
    library = IntentLibrary.from_json(Path(args.library).read_text())
    index = compile_index(library)
    Path(args.out).write_text(serialize_index(index))
    print(
        f"indexed {index.num_examples} examples across {index.num_intents} intents "
        f"({index.fst.num_states} states, {index.fst.num_arcs()} arcs)",
        file=sys.stderr,
    )
    return EXIT_OK


_worker_index: Optional[IndexTransducer] = None


def _init_worker(index_text: str) -> None:
    global _worker_index
    _worker_index = load_index(index_text)


def _run_one(task) -> tuple[str, Optional[ConversationOutput], Optional[str]]:
    name, text, min_span, renormalize = task
    try:
        return name, rescore_to_records(
            name, text, _worker_index, min_span, renormalize
        ), None
    except IntentLatticeError as exc:
        return name, None, str(exc)


def cmd_rescore(args) -> int:
    index_text = Path(args.index).read_text()
    inputs = list(args.inputs)
    if args.limit is not None:
        inputs = inputs[: args.limit]
    tasks = [
        (Path(f).stem, Path(f).read_text(), args.min_span, args.renormalize)
        for f in inputs
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=args.jobs, initializer=_init_worker, initargs=(index_text,)
        ) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        _init_worker(index_text)
        results = [_run_one(t) for t in tasks]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = (
        ["baseline.jsonl"]
        if args.baseline_only
        else ["transcripts.jsonl", "annotations.jsonl", "baseline.jsonl"]
    )
    handles = {name: (out_dir / name).open("w") for name in names}
    try:
        for name, output, err in results:
            if err is not None:
                if args.strict:
                    print(f"error: {name}: {err}", file=sys.stderr)
                    return EXIT_DATA
                print(f"warning: skipping {name}: {err}", file=sys.stderr)
                continue
            if not args.baseline_only:
                for rec in output.transcripts:
                    handles["transcripts.jsonl"].write(_dump(rec) + "\n")
                for rec in output.annotations:
                    handles["annotations.jsonl"].write(_dump(rec) + "\n")
            for rec in output.baseline:
                handles["baseline.jsonl"].write(_dump(rec) + "\n")
    finally:
        for h in handles.values():
            h.close()
    return EXIT_OK


def _read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise IntentLatticeError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_stats(args) -> int:
    rescored = _read_jsonl(args.rescored)
    baseline = _read_jsonl(args.baseline)
    transcripts = _read_jsonl(args.transcripts) if args.transcripts else None
    print(json.dumps(summarize(rescored, baseline, transcripts), indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    index = load_index(Path(args.index).read_text()) if args.index else None
    uvicorn.run(create_app(index), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="intentlattice",
        description="Spot intent phrasings in confusion-network lattices and "
        "rescore transcripts toward the evidence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "build-index", parents=[], help="compile an intent library into an index file"
    )
    p.add_argument("--library", required=True, help="intent library JSON")
    p.add_argument("--out", required=True, help="output index path")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("rescore", help="rescore conversation lattices")
    p.add_argument("--index", required=True, help="compiled index file")
    p.add_argument(
        "--inputs", required=True, nargs="+", help="lattice files, one conversation each"
    )
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--min-span",
        type=int,
        default=DEFAULT_MIN_SPAN,
        help="drop matches shorter than this many intent words (default %(default)s)",
    )
    p.add_argument(
        "--baseline-only",
        action="store_true",
        help="emit only baseline.jsonl (matches on the unrescored transcript)",
    )
    p.add_argument(
        "--strict", action="store_true", help="fail on the first bad conversation"
    )
    p.add_argument(
        "--renormalize",
        action="store_true",
        help="rescale slots whose posteriors do not sum to 1",
    )
    p.add_argument("--limit", type=int, default=None, help="process at most N inputs")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("stats", help="summarize rescoring output")
    p.add_argument("--rescored", required=True, help="annotations.jsonl")
    p.add_argument("--baseline", required=True, help="baseline.jsonl")
    p.add_argument("--transcripts", default=None, help="transcripts.jsonl (optional)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--index", default=None, help="preload a compiled index")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IntentLatticeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
