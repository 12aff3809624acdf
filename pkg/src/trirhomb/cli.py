"""Command-line entry point: ``trirhomb <command> [flags]``.

Exit status: 0 on success, 1 when a check finds problems (validate,
check-rules, structure on an invalid patch), 2 on usage errors.
A ``--config`` file of ``key = value`` lines supplies defaults for any flag;
flags given on the command line win.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, engine, render, rules
from .geometry import AngleParam
from .tiling import ParseError, UnresolvedPrototile, atomic_write, parse_patch, serialize_patch

HELP_WIDTH = 80

COMMANDS = ("generate", "validate", "census", "structure", "scan-period", "render", "sweep", "check-rules")

# commands refused at alpha 0 / 180 (they need a genuine rhombus)
_GENERATION_DOMAIN = {"generate", "validate", "structure", "check-rules"}


class UsageError(Exception):
    def __init__(self, flag, msg):
        super().__init__(f"{flag}: {msg}" if flag else msg)
        self.flag = flag


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=30)


def _common(sp, *, alpha_help="rhombus angle in degrees, p/q or decimal"):
    sp.add_argument("--config", metavar="FILE", help="key = value file of flag defaults")
    sp.add_argument("--rules", metavar="FILE", help="rule file (default: $TRIRHOMB_RULES_DIR or shipped data)")
    sp.add_argument("--alpha", metavar="DEG", help=alpha_help)


def _report(sp):
    sp.add_argument("--format", choices=("text", "json"), default=None, help="report format (default text)")
    sp.add_argument("-o", "--output", metavar="FILE", help="write the report here instead of stdout")


def _input(sp):
    sp.add_argument("-i", "--input", metavar="PATCH", help="patch file")


def _style(sp):
    sp.add_argument("--decorations", action="store_true", default=None, help="draw corner dots and arrows")
    sp.add_argument("--color-by", choices=[c.value for c in render.ColorBy], default=None,
                    help="tile colouring (default class)")
    sp.add_argument("--structure", action="store_true", default=None,
                    help="overlay the hexagon-centre structure")
    sp.add_argument("--glue", action="store_true", default=None, help="emphasise rhombi (thin-rhombus glue)")
    sp.add_argument("--stroke-width", type=float, metavar="W", default=None, help="edge stroke width")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trirhomb", formatter_class=_formatter,
                                 description="Triangle and rhombus substitution tilings of variable angle.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    sp = sub.add_parser("generate", help="substitute a seed tile to a given depth", formatter_class=_formatter)
    _common(sp)
    sp.add_argument("--variant", choices=[v.value for v in rules.RuleVariant], help="rule variant")
    sp.add_argument("--depth", type=int, metavar="N", help="number of substitution steps")
    sp.add_argument("--seed", metavar="SEED", help="PID or PID@rot[,flip[,{(k,m):c,...}]]")
    sp.add_argument("--max-depth", type=int, metavar="N", help=f"depth cap (default {engine.DEFAULT_MAX_DEPTH})")
    sp.add_argument("-o", "--output", metavar="FILE", help="patch file to write (default stdout)")

    sp = sub.add_parser("validate", help="check a patch for overlaps, gaps and mismatches",
                        formatter_class=_formatter)
    _common(sp, alpha_help="evaluate at this angle (default: patch header)")
    _input(sp)
    sp.add_argument("--density", type=float, metavar="D", help="gap samples per unit area (default 400)")
    _report(sp)

    sp = sub.add_parser("census", help="count tiles by kind, class and orientation", formatter_class=_formatter)
    _common(sp, alpha_help="evaluate at this angle (default: patch header)")
    _input(sp)
    _report(sp)

    sp = sub.add_parser("structure", help="graph on the centres of six-triangle hexagons",
                        formatter_class=_formatter)
    _common(sp, alpha_help="evaluate at this angle (default: patch header)")
    _input(sp)
    sp.add_argument("-k", type=int, metavar="K", help="join centres at the K smallest distances (default 1)")
    _report(sp)

    sp = sub.add_parser("scan-period", help="search for a translational period", formatter_class=_formatter)
    _common(sp, alpha_help="evaluate at this angle, 0 and 180 allowed (default: patch header)")
    _input(sp)
    sp.add_argument("--max-radius", type=float, metavar="R", help="longest translation tried (default 10)")
    sp.add_argument("--undecorated", action="store_true", default=None, help="ignore decorations")
    _report(sp)

    sp = sub.add_parser("render", help="write an SVG of a patch", formatter_class=_formatter)
    _common(sp, alpha_help="evaluate at this angle, 0 and 180 allowed (default: patch header)")
    _input(sp)
    _style(sp)
    sp.add_argument("-o", "--output", metavar="FILE", help="SVG file to write (default stdout)")

    sp = sub.add_parser("sweep", help="write SVG frames over a range of angles", formatter_class=_formatter)
    sp.add_argument("--config", metavar="FILE", help="key = value file of flag defaults")
    sp.add_argument("--rules", metavar="FILE", help="rule file (default: $TRIRHOMB_RULES_DIR or shipped data)")
    _input(sp)
    sp.add_argument("--start", metavar="DEG", help="first angle")
    sp.add_argument("--end", metavar="DEG", help="last angle")
    sp.add_argument("--frames", type=int, metavar="N", help="number of frames, at least 2")
    _style(sp)
    sp.add_argument("-o", "--output", metavar="DIR", help="directory for frame_NNNN.svg and manifest.txt")

    sp = sub.add_parser("check-rules", help="verify a rule file's consistency", formatter_class=_formatter)
    _common(sp)
    sp.add_argument("--variant", choices=[v.value for v in rules.RuleVariant], help="rule variant")
    sp.add_argument("--method", choices=("clip", "sample"), default=None, help="overlap test (default clip)")
    _report(sp)
    return ap


# mandatory settings per command, checked before any work
_REQUIRED = {
    "generate": ("variant", "alpha", "depth"),
    "validate": ("input",),
    "census": ("input",),
    "structure": ("input",),
    "scan-period": ("input",),
    "render": ("input",),
    "sweep": ("input", "start", "end", "frames", "output"),
    "check-rules": ("variant", "alpha"),
}


def _flag(dest: str) -> str:
    return "-k" if dest == "k" else "--" + dest.replace("_", "-")


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError("--config", f"cannot read {path}: {exc.strerror}") from exc
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise UsageError("--config", f"line {n}: expected key = value")
        k, v = (x.strip() for x in s.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(args, parser_for_cmd) -> None:
    if not getattr(args, "config", None):
        return
    known = {a.dest: a for a in parser_for_cmd._actions}
    for k, v in read_config(args.config).items():
        if k not in known or k in ("help", "config"):
            raise UsageError("--config", f"unknown setting {k!r} for {args.command}")
        if getattr(args, k) is not None:
            continue               # command line wins
        act = known[k]
        if isinstance(act, argparse._StoreTrueAction):
            val = v.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                val = act.type(v)
            except ValueError as exc:
                raise UsageError(_flag(k), f"bad value {v!r} in config") from exc
        else:
            val = v
        if act.choices is not None and val not in act.choices:
            raise UsageError(_flag(k), f"{val!r} is not one of {', '.join(map(str, act.choices))}")
        setattr(args, k, val)


def _angle(args, dest="alpha", degenerate_ok=True):
    raw = getattr(args, dest, None)
    if raw is None:
        return None
    try:
        a = AngleParam.parse(raw)
    except ValueError as exc:
        raise UsageError(_flag(dest), str(exc)) from exc
    if a.is_degenerate and not degenerate_ok:
        raise UsageError(_flag(dest), f"alpha = {a.text()} is degenerate; {args.command} needs 0 < alpha < 180")
    return a


def _ruleset(args, variant, alpha) -> rules.RuleSet:
    try:
        return rules.load_ruleset(Path(args.rules) if args.rules else None, variant, alpha)
    except FileNotFoundError as exc:
        raise UsageError("--rules", f"cannot read {exc.filename}") from exc


def _load_patch(args):
    path = Path(args.input)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError("--input", f"cannot read {path}: {exc.strerror}") from exc
    head = text.split("\n", 1)[0].split()
    variant = next((t.split("=", 1)[1] for t in head if t.startswith("variant=")), None)
    if variant is None:
        raise UsageError("--input", f"{path}: not a patch file")
    rs = _ruleset(args, variant, 60)
    try:
        return parse_patch(text, rs.prototiles), rs
    except (ParseError, UnresolvedPrototile) as exc:
        raise UsageError("--input", f"{path}: {exc}") from exc


def _emit(args, lines: list[str], doc: str) -> None:
    out = doc + "\n" if (args.format or "text") == "json" else "\n".join(lines) + "\n"
    if args.output:
        atomic_write(args.output, out)
    else:
        sys.stdout.write(out)


def _style_of(args) -> render.StyleSpec:
    kw = {}
    if args.decorations:
        kw["show_decorations"] = True
    if args.color_by:
        kw["color_by"] = render.ColorBy(args.color_by)
    if args.structure:
        kw["show_structure_overlay"] = True
    if args.glue:
        kw["glue_mode"] = True
    if args.stroke_width is not None:
        kw["stroke_width"] = args.stroke_width
    return render.StyleSpec(**kw)


def run(args) -> int:
    cmd = args.command
    dom = cmd not in _GENERATION_DOMAIN

    if cmd == "generate":
        a = _angle(args, degenerate_ok=False)
        if args.depth < 0:
            raise UsageError("--depth", "must be nonnegative")
        cap = args.max_depth if args.max_depth is not None else engine.DEFAULT_MAX_DEPTH
        if args.depth > cap:
            raise UsageError("--depth", f"{args.depth} exceeds the cap {cap}")
        rs = _ruleset(args, args.variant, a)
        try:
            seed = engine.parse_seed(args.seed) if args.seed else None
            if seed is not None:
                rs.prototile(seed.prototile_id)
        except (ValueError, KeyError) as exc:
            raise UsageError("--seed", str(exc)) from exc
        try:
            p = engine.generate(engine.GenerationConfig(args.depth, args.variant, a, seed, cap), rs)
        except ValueError as exc:
            raise UsageError("--seed", str(exc)) from exc
        text = serialize_patch(p)
        if args.output:
            atomic_write(args.output, text)
        else:
            sys.stdout.write(text)
        return 0

    if cmd == "check-rules":
        a = _angle(args, degenerate_ok=False)
        rs = _ruleset(args, args.variant, a)
        rep = rules.check_ruleset(rs, method=args.method or "clip")
        _emit(args, rep.lines(), rep.to_json())
        return 0 if rep.passed else 1

    if cmd == "sweep":
        start, end = _angle(args, "start"), _angle(args, "end")
        if args.frames < 2:
            raise UsageError("--frames", "need at least 2")
        p, _ = _load_patch(args)
        render.write_sweep(args.output, p, render.SweepSpec(start, end, args.frames), _style_of(args))
        return 0

    a = _angle(args, degenerate_ok=dom)
    p, rs = _load_patch(args)
    if a is None:
        a = p.alpha
        if a.is_degenerate and not dom:
            raise UsageError("--alpha", f"patch angle {a.text()} is degenerate")

    if cmd == "validate":
        rep = analysis.validate(p, a, rs.matching, density=args.density or 400.0)
        _emit(args, rep.lines(), rep.to_json())
        return 0 if rep.passed else 1
    if cmd == "census":
        c = analysis.census(p, a)
        _emit(args, c.lines(), c.to_json())
        return 0
    if cmd == "structure":
        try:
            g = analysis.underlying_structure(p, a, k=args.k or 1)
        except analysis.NotValidated as exc:
            sys.stderr.write(f"trirhomb structure: {exc}\n")
            return 1
        _emit(args, g.lines(), g.to_json())
        return 0
    if cmd == "scan-period":
        decorated = False if args.undecorated else None
        t = analysis.periodicity_scan(p, a, args.max_radius or 10.0, decorated=decorated)
        if t is None:
            lines, doc = ["period none"], '{"period": null}'
        else:
            lines = [f"period {t[0]:.9f} {t[1]:.9f} length {float((t ** 2).sum() ** 0.5):.9f}"]
            doc = '{"period": [%.9f, %.9f]}' % (t[0], t[1])
        _emit(args, lines, doc)
        return 0
    if cmd == "render":
        doc = render.render_svg(p, a, _style_of(args))
        if args.output:
            atomic_write(args.output, doc)
        else:
            sys.stdout.write(doc)
        return 0
    raise UsageError(None, f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        sys.stderr.write("trirhomb: error: a command is required\n")
        return 2
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        _apply_config(args, sub)
        missing = [_flag(d) for d in _REQUIRED[args.command] if getattr(args, d, None) is None]
        if missing:
            raise UsageError(missing[0], "required" + (f" (also {', '.join(missing[1:])})" if missing[1:] else ""))
        return run(args)
    except UsageError as exc:
        sys.stderr.write(f"trirhomb {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
