"""Command-line front end.

Exit codes: 0 property holds or diagram valid, 1 property fails, 2 usage or
input error, 3 state limit or token bound exceeded, 4 divergence.
``check-all`` exits with the most severe code of its two checks.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from ._version import __version__
from .checker import ModelError, check_deadlock, check_determinism, explain_path, explore
from .checker.checks import PASS, Verdict
from .diagram import DiagramError, errors, load_diagram, validate
from .expr import DEFAULT_INT_CAP
from .export import export_cspm
from .reporting import (
    EXIT_DIVERGENT,
    EXIT_FAIL,
    EXIT_LIMIT,
    EXIT_OK,
    EXIT_USAGE,
    TraceMapping,
    build_report,
    emit_dot,
    emit_reports,
    exit_code,
    map_trace,
)
from .translate import TranslationConfig, TranslationError, translate

CHECKS = {"deadlock": check_deadlock, "determinism": check_determinism}
COMMANDS = ("validate", "translate", "check-deadlock", "check-determinism", "check-all", "corpus")
_SEVERITY = [EXIT_OK, EXIT_FAIL, EXIT_LIMIT, EXIT_DIVERGENT, EXIT_USAGE]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str
    report: str | None = None
    dot: str | None = None
    cspm: str | None = None
    csv: str | None = None
    artifacts: str | None = None
    max_tokens: int | None = None
    state_limit: int | None = None
    hide: tuple[str, ...] = ()
    visible: tuple[str, ...] = ()
    int_cap: int = DEFAULT_INT_CAP
    strict_tokens: bool = False
    debug_trace: bool = False
    jobs: int = 1
    quiet: bool = False
    stdout: object = field(default=None, repr=False)
    stderr: object = field(default=None, repr=False)

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("max_tokens", "state_limit", "int_cap", "jobs"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        outs = [p for p in (self.report, self.dot, self.cspm, self.csv) if p]
        resolved = [os.path.abspath(p) for p in outs]
        if len(set(resolved)) != len(resolved):
            raise UsageError("output paths must be distinct")
        if os.path.abspath(self.input) in resolved:
            raise UsageError("an output path would overwrite the input")

    def translation(self) -> TranslationConfig:
        base = TranslationConfig(
            max_tokens=self.max_tokens,
            int_cap=self.int_cap,
            strict_tokens=self.strict_tokens,
            state_limit=self.state_limit,
        )
        return base.with_visibility(self.visible, self.hide)


# ------------------------------------------------------------------ output


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _out(cfg: RunConfig, msg: str = "") -> None:
    if not cfg.quiet:
        print(msg, file=cfg.stdout or sys.stdout)


def _err(cfg: RunConfig, msg: str) -> None:
    print(f"actdiag: {msg}", file=cfg.stderr or sys.stderr)


# -------------------------------------------------------------------- run


def run(cfg: RunConfig) -> int:
    try:
        cfg.check()
        if cfg.command == "corpus":
            return _run_corpus(cfg)
        d = load_diagram(cfg.input, cfg.int_cap)
        if cfg.command == "validate":
            return _validate(cfg, d)
        tcfg = cfg.translation()
        model = translate(d, tcfg)
        if cfg.command == "translate":
            text = export_cspm(model)
            if cfg.cspm:
                write_atomic(cfg.cspm, text)
                _out(cfg, f"wrote {cfg.cspm}")
            else:
                (cfg.stdout or sys.stdout).write(text)
            return EXIT_OK
        return _check(cfg, model)
    except (UsageError, TranslationError) as exc:
        _err(cfg, str(exc))
        return EXIT_USAGE
    except DiagramError as exc:
        _err(cfg, f"{cfg.input}: {exc}")
        return EXIT_USAGE
    except ModelError as exc:
        _err(cfg, f"model error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _err(cfg, str(exc))
        return EXIT_USAGE


def _validate(cfg: RunConfig, d) -> int:
    found = validate(d)
    for v in found:
        _out(cfg, str(v))
    bad = errors(found)
    _out(cfg, f"{len(bad)} error(s), {len(found) - len(bad)} warning(s)")
    return EXIT_FAIL if bad else EXIT_OK


def _check(cfg: RunConfig, model) -> int:
    limit = model.bounds["stateLimit"]
    props = {
        "check-deadlock": ("deadlock",),
        "check-determinism": ("determinism",),
        "check-all": ("deadlock", "determinism"),
    }[cfg.command]
    lts = explore(props[0], model, limit)
    if isinstance(lts, Verdict):
        verdicts = [replace(lts, property=p) for p in props]
        lts = None
    else:
        verdicts = [CHECKS[p](lts) for p in props]

    mapping = TraceMapping()
    reports = []
    for v in verdicts:
        t = map_trace(v, model)
        mapping = mapping.merge(t)
        full = None
        if cfg.debug_trace and v.full_trace:
            full = explain_path(model, lts, v.path, v.full_trace) if lts is not None and v.path else v.full_trace
        reports.append(build_report(v, t, model, full))
        _summarise(cfg, v, full)

    if cfg.report:
        write_atomic(cfg.report, emit_reports(reports))
    if cfg.dot:
        write_atomic(cfg.dot, emit_dot(model.diagram, mapping))
    if cfg.cspm:
        write_atomic(cfg.cspm, export_cspm(model))
    return max((exit_code(v.result) for v in verdicts), key=_SEVERITY.index)


def _summarise(cfg: RunConfig, v: Verdict, full) -> None:
    _out(cfg, f"{v.property}: {v.result} ({v.states} states, {v.transitions} transitions)")
    if v.result == PASS:
        return
    if v.detail:
        _out(cfg, f"  {v.detail}")
    if v.trace:
        _out(cfg, "  trace: " + ", ".join(str(e) for e in v.trace))
    if v.blocked:
        _out(cfg, "  waiting on: " + ", ".join(str(e) for e in v.blocked))
    if full is not None:
        _out(cfg, "  full trace: " + ", ".join(str(e) for e in full))


# ----------------------------------------------------------------- corpus

CORPUS_COLUMNS = (
    "model",
    "nodes",
    "edges",
    "states",
    "transitions",
    "deadlock",
    "determinism",
    "explore_ms",
    "deadlock_ms",
    "determinism_ms",
    "error",
)


def _corpus_row(path: str, cfg: RunConfig) -> dict:
    row = dict.fromkeys(CORPUS_COLUMNS, "")
    row["model"] = Path(path).stem
    try:
        d = load_diagram(path, cfg.int_cap)
        row["nodes"], row["edges"] = d.node_count, d.edge_count
        model = translate(d, cfg.translation())
        limit = model.bounds["stateLimit"]
        t0 = time.perf_counter()
        lts = explore("deadlock", model, limit)
        t1 = time.perf_counter()
        if isinstance(lts, Verdict):
            dl, dt = lts, replace(lts, property="determinism")
            t2 = t3 = t1
        else:
            dl = check_deadlock(lts)
            t2 = time.perf_counter()
            dt = check_determinism(lts)
            t3 = time.perf_counter()
        row.update(
            states=dl.states,
            transitions=dl.transitions,
            deadlock=dl.result,
            determinism=dt.result,
            explore_ms=f"{(t1 - t0) * 1000:.1f}",
            deadlock_ms=f"{(t2 - t1) * 1000:.1f}",
            determinism_ms=f"{(t3 - t2) * 1000:.1f}",
        )
        if cfg.artifacts:
            out = Path(cfg.artifacts)
            reports = []
            mapping = TraceMapping()
            for v in (dl, dt):
                t = map_trace(v, model)
                mapping = mapping.merge(t)
                reports.append(build_report(v, t, model))
            write_atomic(str(out / f"{row['model']}.report.json"), emit_reports(reports))
            write_atomic(str(out / f"{row['model']}.dot"), emit_dot(d, mapping))
            write_atomic(str(out / f"{row['model']}.csp"), export_cspm(model))
    except (DiagramError, TranslationError, ModelError, OSError) as exc:
        row["error"] = str(exc) or type(exc).__name__
    return row


def run_corpus(directory: str, cfg: RunConfig | None = None) -> list[dict]:
    """One summary row per ``*.json`` file, in file name order."""
    cfg = cfg or RunConfig("corpus", directory)
    root = Path(directory)
    if not root.is_dir():
        raise UsageError(f"{directory} is not a directory")
    paths = sorted(str(p) for p in root.glob("*.json"))
    if cfg.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_corpus_row, paths, [_portable(cfg)] * len(paths)))
    return [_corpus_row(p, cfg) for p in paths]


def _portable(cfg: RunConfig) -> RunConfig:
    return replace(cfg, stdout=None, stderr=None)


def render_table(rows: Sequence[dict]) -> str:
    cols = CORPUS_COLUMNS
    cells = [list(cols)] + [[str(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    numeric = {"nodes", "edges", "states", "transitions", "explore_ms", "deadlock_ms", "determinism_ms"}
    lines = []
    for row in cells:
        parts = [
            row[i].rjust(widths[i]) if cols[i] in numeric else row[i].ljust(widths[i]) for i in range(len(cols))
        ]
        lines.append("  ".join(parts).rstrip())
    return "\n".join(lines) + "\n"


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CORPUS_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _run_corpus(cfg: RunConfig) -> int:
    rows = run_corpus(cfg.input, cfg)
    _out(cfg, render_table(rows).rstrip("\n"))
    if cfg.csv:
        write_atomic(cfg.csv, render_csv(rows))
    for r in rows:
        if r["error"]:
            _err(cfg, f"{r['model']}: {r['error']}")
    return EXIT_OK


# ------------------------------------------------------------------ argv


def _split(values: Sequence[str] | None) -> tuple[str, ...]:
    out = []
    for v in values or ():
        out.extend(x for x in (s.strip() for s in v.split(",")) if x)
    return tuple(out)


_CONFIG_KEYS = {
    "max-tokens": "max_tokens",
    "state-limit": "state_limit",
    "int-cap": "int_cap",
    "hide": "hide",
    "visible": "visible",
    "strict-tokens": "strict_tokens",
}


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    out = {}
    for k, v in data.items():
        if k not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {k!r}")
        out[_CONFIG_KEYS[k]] = tuple(v) if k in ("hide", "visible") else v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="actdiag", description="Check UML activity diagrams for deadlock and determinism.")
    p.add_argument("--version", action="version", version=f"actdiag {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def translation_flags(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON file with translation keys (flags win)")
        sp.add_argument("--max-tokens", type=int, metavar="N", help="token bound per activity")
        sp.add_argument("--int-cap", type=int, metavar="N", help="largest allowed data domain")
        sp.add_argument("--hide", action="append", metavar="CHAN,...", help="channels to hide")
        sp.add_argument("--visible", action="append", metavar="CHAN,...", help="channels to make visible")
        sp.add_argument("--strict-tokens", action="store_true", default=None, help="report token bound overflow instead of clamping")

    sp = sub.add_parser("validate", help="check a diagram for well-formedness")
    sp.add_argument("input")
    sp.add_argument("--int-cap", type=int, metavar="N")

    sp = sub.add_parser("translate", help="write the CSP_M script of a diagram")
    sp.add_argument("input")
    sp.add_argument("--cspm", metavar="PATH", help="output file (default: standard output)")
    translation_flags(sp)

    for name, what in (
        ("check-deadlock", "deadlock freedom"),
        ("check-determinism", "determinism"),
        ("check-all", "deadlock freedom, then determinism"),
    ):
        sp = sub.add_parser(name, help=f"check {what}")
        sp.add_argument("input")
        sp.add_argument("--report", metavar="PATH", help="JSON report")
        sp.add_argument("--dot", metavar="PATH", help="highlighted diagram in DOT")
        sp.add_argument("--cspm", metavar="PATH", help="CSP_M script")
        sp.add_argument("--state-limit", type=int, metavar="N")
        sp.add_argument("--debug-trace", action="store_true", help="include hidden events in the trace")
        translation_flags(sp)

    sp = sub.add_parser("corpus", help="check every *.json diagram in a directory")
    sp.add_argument("input", metavar="DIR")
    sp.add_argument("--csv", metavar="PATH", help="also write the summary as CSV")
    sp.add_argument("--artifacts", metavar="DIR", help="write report, DOT and CSP_M per model here")
    sp.add_argument("--jobs", type=int, default=1, metavar="N", help="models checked in parallel")
    sp.add_argument("--state-limit", type=int, metavar="N")
    translation_flags(sp)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = _load_config(ns.config) if getattr(ns, "config", None) else {}
    for key in ("report", "dot", "cspm", "csv", "artifacts", "max_tokens", "state_limit", "int_cap", "jobs", "strict_tokens", "debug_trace"):
        val = getattr(ns, key, None)
        if val is not None:
            values[key] = val
    for key in ("hide", "visible"):
        if getattr(ns, key, None):
            values[key] = _split(getattr(ns, key))
        elif key in values:
            values[key] = _split(values[key])
    values.setdefault("int_cap", DEFAULT_INT_CAP)
    values["strict_tokens"] = bool(values.get("strict_tokens", False))
    values["debug_trace"] = bool(values.get("debug_trace", False))
    return RunConfig(command=ns.command, input=ns.input, **values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config_from_args(ns)
    except (UsageError, TypeError) as exc:
        print(f"actdiag: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
