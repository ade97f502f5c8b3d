"""Command-line interface.

Settings resolve as: command-line flags, then environment variables
(PROPHIER_PARSER_URL, PROPHIER_RULES), then the INI file given by --config
or PROPHIER_CONFIG (section [prophier]), then built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import formats
from . import pattern as pat
from .evaluate import DEFAULT_THRESHOLD, EvalError, evaluate, fmt, load_gold, load_grouping
from .parsers import ENV_URL, FileSource, HttpSource, ParserError, fetch_parses
from .rules import RuleError, lint_rules, load_rules
from .transform import RecursionBudgetExceeded, transform
from .tree import TreeError, parse_bracketed, read_trees

log = logging.getLogger("prophier")

ENV_RULES = "PROPHIER_RULES"
ENV_CONFIG = "PROPHIER_CONFIG"
DEFAULTS = {"format": "tree", "workers": "1", "threshold": str(DEFAULT_THRESHOLD), "timeout": "30"}


class Settings:
    """Layered lookup: flag value, env var, config file, default."""

    def __init__(self, args):
        self.args = args
        self.file = {}
        path = getattr(args, "config", None) or os.environ.get(ENV_CONFIG)
        if path:
            cp = configparser.ConfigParser(interpolation=None)
            if not cp.read(path, encoding="utf-8"):
                raise FileNotFoundError(f"config file {path} not found")
            if cp.has_section("prophier"):
                self.file = dict(cp["prophier"])

    def get(self, name, env=None):
        val = getattr(self.args, name, None)
        if val is not None:
            return val
        if env and os.environ.get(env):
            return os.environ[env]
        if name in self.file:
            return self.file[name]
        return DEFAULTS.get(name)


def _open_out(path):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def _err(msg):
    print(f"prophier: {msg}", file=sys.stderr)


# -- simplify ----------------------------------------------------------------

_WORKER = {}


def _init_worker(rules_path):
    _WORKER["rules"] = load_rules(rules_path) if rules_path else load_rules()


def _simplify_one(item):
    sid, tree, ctypes = item
    try:
        return sid, transform(tree, _WORKER["rules"], clause_types=ctypes), None
    except RecursionBudgetExceeded as exc:
        return sid, None, str(exc)


def _read_inputs(settings, args):
    """(id, tree or None, error or None) per input sentence."""
    keep = args.keep_going
    if args.trees:
        items = []
        with open(args.trees, encoding="utf-8") as fh:
            n = 0
            for lineno, line in enumerate(fh, 1):
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                n += 1
                try:
                    items.append((str(n), parse_bracketed(line), None))
                except TreeError as exc:
                    if not keep:
                        raise TreeError(f"{args.trees}:{lineno}: {exc}") from exc
                    items.append((str(n), None, f"line {lineno}: {exc}"))
        return items
    with open(args.text, encoding="utf-8") as fh:
        sentences = [ln.strip() for ln in fh if ln.strip()]
    if args.parses:
        source = FileSource(args.parses)
    else:
        url = settings.get("parser", ENV_URL)
        if not url:
            raise ParserError(f"--text needs --parses FILE or --parser URL (or {ENV_URL})")
        source = HttpSource(url, timeout=float(settings.get("timeout")))
    trees = fetch_parses(source, sentences)
    return [(str(i + 1), t, None) for i, t in enumerate(trees)]


def cmd_simplify(args) -> int:
    settings = Settings(args)
    rules_path = settings.get("rules", ENV_RULES)
    fmt_name = settings.get("format")
    if fmt_name not in formats.FORMATS:
        _err(f"unknown format {fmt_name!r}")
        return 1
    workers = int(settings.get("workers"))
    try:
        _init_worker(rules_path)
        items = _read_inputs(settings, args)
    except (OSError, TreeError, ParserError, RuleError) as exc:
        _err(str(exc))
        return 1
    ctypes = not args.no_clause_types
    todo = [(sid, tree, ctypes) for sid, tree, err in items if tree is not None]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(rules_path,)) as pool:
            done = {sid: (lpt, err) for sid, lpt, err in pool.map(_simplify_one, todo, chunksize=8)}
    else:
        done = {sid: (lpt, err) for sid, lpt, err in map(_simplify_one, todo)}
    failed = 0
    out = _open_out(args.out)
    try:
        for sid, tree, err in items:
            lpt, err2 = done.get(sid, (None, err))
            err = err or err2
            if err:
                failed += 1
                if not args.keep_going:
                    _err(f"sentence {sid}: {err}")
                    return 1
                out.write(formats.render_error(sid, err, fmt_name))
            else:
                out.write(formats.render(lpt, sid, fmt_name))
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("%d sentences, %d errors", len(items), failed)
    return 0


# -- eval --------------------------------------------------------------------

def _table(rows, headers):
    widths = [max(len(str(r[i])) for r in [headers, *rows]) for i in range(len(headers))]
    line = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    return "\n".join([line(headers), line(["-" * w for w in widths])] + [line(r) for r in rows])


def cmd_eval(args) -> int:
    settings = Settings(args)
    threshold = float(settings.get("threshold"))
    try:
        with open(args.system, encoding="utf-8") as fh:
            system = formats.read_structured(fh)
        gold = load_gold(args.gold)
        grouping = load_grouping(settings.get("grouping"))
    except (OSError, formats.FormatError, EvalError) as exc:
        _err(str(exc))
        return 1
    by_id = {sid: lpt for sid, lpt, err in system if lpt is not None}
    pairs = []
    for g in gold:
        if g.sentence_id in by_id:
            pairs.append((by_id[g.sentence_id], g))
        else:
            log.warning("no system output for gold sentence %s", g.sentence_id)
    try:
        report = evaluate(pairs, grouping, threshold, normalized=not args.no_normalize)
    except EvalError as exc:
        _err(str(exc))
        return 1
    d = report.to_dict()
    print(_table([["sentences", len(pairs)], ["gold EDUs", d["edus"]], ["matched pairs", d["matched"]],
                  ["match rate", fmt(d["match_rate"])],
                  ["nuclearity precision", f"{fmt(d['nuclearity']['precision'])} "
                                           f"({d['nuclearity']['correct']}/{d['nuclearity']['scored']})"],
                  ["avg relation precision", fmt(d["average_relation_precision"])],
                  ["unknown relations", d["unknown"]]], ["metric", "value"]))
    print()
    rel_rows = [[cls, v["correct"], v["predicted"], fmt(v["precision"])] for cls, v in d["relations"].items()]
    print(_table(rel_rows or [["(none)", 0, 0, "n/a"]], ["class", "correct", "predicted", "precision"]))
    print()
    dist = d["distribution"]
    print(_table([[k, v] for k, v in sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))] or [["(none)", 0]],
                 ["relation", "splits"]))
    if args.report_dir:
        write_report(report, Path(args.report_dir))
    return 0


def write_report(report, outdir: Path):
    from . import plots

    outdir.mkdir(parents=True, exist_ok=True)
    d = report.to_dict()
    with open(outdir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(outdir / "relations.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["class", "correct", "predicted", "precision"])
        for cls, v in d["relations"].items():
            w.writerow([cls, v["correct"], v["predicted"], fmt(v["precision"])])
    with open(outdir / "distribution.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["relation", "splits"])
        for k, v in sorted(d["distribution"].items()):
            w.writerow([k, v])
    with open(outdir / "matches.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["sentence", "proposition", "edu", "score"])
        for sid, prop, edu, score in report.matched_pairs:
            w.writerow([sid, prop, edu, f"{score:.4f}"])
    plots.relation_distribution(d["distribution"], outdir / "distribution.png")
    plots.relation_precision({k: v["precision"] for k, v in d["relations"].items()}, outdir / "precision.png")


# -- pattern -----------------------------------------------------------------

def cmd_pattern(args) -> int:
    try:
        compiled = pat.compile(args.pattern)
    except pat.PatternSyntaxError as exc:
        _err(str(exc))
        print(f"  {args.pattern}\n  {' ' * exc.position}^", file=sys.stderr)
        return 1
    except pat.PatternError as exc:
        _err(str(exc))
        return 1
    try:
        with open(args.trees, encoding="utf-8") as fh:
            trees = read_trees(fh)
    except (OSError, TreeError) as exc:
        _err(str(exc))
        return 1
    total = 0
    for n, tree in enumerate(trees, 1):
        for m in pat.find_all(compiled, tree):
            total += 1
            a = m.anchor
            print(f"tree {n} match at {list(m.anchor_path)} {a.label} [{a.span.start},{a.span.end}): "
                  f"{' '.join(a.tokens())}")
            for name in sorted(m.bindings):
                b = m.bindings[name]
                print(f"  {name} = {b.label} [{b.span.start},{b.span.end}): {' '.join(b.tokens())}")
    print(f"{total} match{'es' if total != 1 else ''}")
    return 0


# -- rules-lint --------------------------------------------------------------

def default_probe_path():
    from importlib import resources
    return resources.files("prophier.resources").joinpath("probe.mrg")


def cmd_rules_lint(args) -> int:
    settings = Settings(args)
    path = settings.get("rules", ENV_RULES)
    try:
        rules = load_rules(path) if path else load_rules()
    except (OSError, RuleError) as exc:
        _err(str(exc))
        print("0 rules, 0 groups, 1 errors")
        return 1
    probe = None
    if not args.no_probe:
        with open(args.probe or default_probe_path(), encoding="utf-8") as fh:
            probe = read_trees(fh)
    diags = lint_rules(rules, probe)
    for d in diags:
        print(d)
    errors = sum(d.severity == "error" for d in diags)
    print(f"{len(rules)} rules, {len(rules.groups)} groups, {errors} errors")
    return 1 if errors else 0


# -- entry -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prophier", description="Split sentences into a hierarchy of "
                                "minimal propositions linked by rhetorical relations.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simplify", help="transform parsed sentences")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--trees", help="bracketed trees, one per line")
    src.add_argument("--text", help="raw sentences, one per line (needs --parses or --parser)")
    s.add_argument("--parses", help="trees for --text sentences")
    s.add_argument("--parser", help=f"parser endpoint URL (env {ENV_URL})")
    s.add_argument("--timeout", type=float)
    s.add_argument("--rules", help=f"rule file (env {ENV_RULES})")
    s.add_argument("--format", choices=formats.FORMATS)
    s.add_argument("--out", help="output file (default stdout)")
    s.add_argument("--workers", type=int)
    s.add_argument("--keep-going", action="store_true", help="annotate failing sentences and continue")
    s.add_argument("--no-clause-types", action="store_true")
    s.add_argument("--config")
    s.set_defaults(func=cmd_simplify)

    e = sub.add_parser("eval", help="score structured output against gold discourse units")
    e.add_argument("--system", required=True, help="structured simplify output")
    e.add_argument("--gold", required=True)
    e.add_argument("--grouping", help="relation<TAB>class map (default bundled)")
    e.add_argument("--threshold", type=float)
    e.add_argument("--no-normalize", action="store_true", help="compare raw strings")
    e.add_argument("--report-dir", help="write TSV, JSON and figures here")
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    q = sub.add_parser("pattern", help="show matches of a tree pattern")
    q.add_argument("--pattern", required=True)
    q.add_argument("--trees", required=True)
    q.set_defaults(func=cmd_pattern)

    r = sub.add_parser("rules-lint", help="check a rule file")
    r.add_argument("--rules")
    r.add_argument("--probe", help="trees used for reachability checks (default bundled)")
    r.add_argument("--no-probe", action="store_true")
    r.add_argument("--config")
    r.set_defaults(func=cmd_rules_lint)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
