"""Command-line front end: ``jetgroupoid {derive,symbol,check,compose,invert}``."""

from __future__ import annotations

import argparse
import json
import random
import re
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import JetGroupoidError
from .integrability import (
    FORMALLY_INTEGRABLE,
    INCONCLUSIVE,
    NOT_FORMALLY_INTEGRABLE,
    integrability_loop,
)
from .jets import JetPoint, compose_jets, invert_jet, make_jet
from .kernel import DEFAULT_TERM_CAP, Expr, term_cap, to_string
from .lieform import (
    GeometricObject,
    NaturalBundleAction,
    admissible_point,
    builtin_action,
    check_action_axioms,
    lie_form,
    parse_action,
)

EXIT = {FORMALLY_INTEGRABLE: 0, NOT_FORMALLY_INTEGRABLE: 2, INCONCLUSIVE: 3}
FORMATS = ("text", "json", "latex")


@dataclass
class JobConfig:
    """Everything that determines a run; serialises to and from JSON."""

    command: str = "derive"
    object: str | None = None
    dim: int | None = None
    dsl: str | None = None
    section: str | dict = "symbolic"
    max_order: int = 4
    seed: int = 0
    format: str = "text"
    r_max: int = 3
    term_cap: int = DEFAULT_TERM_CAP
    trials: int = 10
    exhaustive: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "JobConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


# --------------------------------------------------------------------------
# inputs


def load_action(cfg: JobConfig) -> NaturalBundleAction:
    if cfg.dsl:
        text = Path(cfg.dsl).read_text(encoding="utf-8")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return parse_action(text, seed=cfg.seed)
    if cfg.object is None:
        raise ValueError("give --object NAME or --dsl FILE")
    if cfg.dim is None:
        raise ValueError("--dim is required with --object")
    return builtin_action(cfg.object, cfg.dim)


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p.strip() for p in parts if p.strip()]


def parse_section(spec, a: NaturalBundleAction) -> GeometricObject:
    """``symbolic`` or assignments ``name=expr`` for every component.

    A leading ``w`` in a name is accepted for the ``u`` of the action's
    component names (``w11`` means ``u11``).
    """
    if spec is None or spec == "symbolic":
        return GeometricObject.symbolic(a.n, a.m)
    if isinstance(spec, str):
        items = {}
        for part in _split_top_level(spec):
            if "=" not in part:
                raise ValueError(f"section entry {part!r} is not of the form name=expr")
            k, v = part.split("=", 1)
            items[k.strip()] = v.strip()
    else:
        items = dict(spec)
    values = {}
    for k, v in items.items():
        name = k
        if name not in a.components and name.startswith("w") and "u" + name[1:] in a.components:
            name = "u" + name[1:]
        if name not in a.components:
            raise ValueError(f"unknown component {k!r}; expected {', '.join(a.components)}")
        values[name] = v
    missing = [c for c in a.components if c not in values]
    if missing:
        raise ValueError(f"section does not give {', '.join(missing)}")
    return GeometricObject.from_strings(a.n, [values[c] for c in a.components])


_KEY = re.compile(r"^\s*(\d+)\s*;\s*\(([\d,\s]*)\)\s*$")


def parse_jet_literal(text: str, order: int | None = None) -> JetPoint:
    """``{"source": [...], "components": {"i;(a,b)": "p/q"}, "order": q}``; text or a file path."""
    if not text.lstrip().startswith("{") and Path(text).exists():
        text = Path(text).read_text(encoding="utf-8")
    data = json.loads(text)
    source = [Fraction(str(v)) for v in data["source"]]
    n = len(source)
    comps = {}
    for key, val in data.get("components", {}).items():
        m = _KEY.match(key)
        if m is None:
            raise ValueError(f"bad jet component key {key!r}; expected 'i;(a,b,...)'")
        i = int(m.group(1))
        alpha = tuple(int(x) for x in m.group(2).split(",") if x.strip())
        if len(alpha) != n or not 1 <= i <= n:
            raise ValueError(f"jet component {key!r} does not match dimension {n}")
        comps[(i, alpha)] = Fraction(str(val))
    q = order if order is not None else data.get("order", max((sum(al) for _, al in comps), default=1))
    for i in range(1, n + 1):
        if (i, (0,) * n) not in comps:
            raise ValueError(f"jet literal lacks the target component '{i};({','.join('0' * n)})'")
    return make_jet(source, comps, max(q, 1))


def jet_literal(f: JetPoint) -> dict:
    comps = {}
    for (i, alpha), v in sorted(f.components.items(), key=lambda kv: (sum(kv[0][1]), kv[0][1][::-1], kv[0][0])):
        if v != 0 or not any(alpha):
            comps[f"{i};({','.join(map(str, alpha))})"] = str(v)
    return {"source": [str(v) for v in f.source], "order": f.order, "components": comps}


# --------------------------------------------------------------------------
# rendering


def _frac(v) -> str:
    return str(Fraction(v))


def _expr(e: Expr | None) -> str | None:
    return None if e is None else to_string(e)


def derive_payload(report, cfg: JobConfig, timings: bool) -> dict:
    iterations = [
        {
            "order": it.order,
            "equations": it.equations,
            "rows": it.rows,
            "unknowns": it.unknowns,
            "generic_rank": it.generic_rank,
            "numeric_ranks": it.numeric_ranks,
            "condition_count": len(it.conditions),
            "conditions": [to_string(c) for c in it.conditions],
            "working_order": it.working_order,
            "symbol_dims": it.symbol_dims,
            "two_acyclic": it.two_acyclic,
            "involutive": it.involutive,
            "certified": it.certified,
            "certificate": it.certificate,
        }
        for it in report.iterations
    ]
    return {
        "config": asdict(cfg),
        "iterations": iterations,
        "symbol": symbol_payload(report.symbol, report.rank_samples),
        "vessiot": vessiot_payload(report.vessiot),
        "verdict": {
            "status": report.verdict,
            "obstruction": report.obstruction,
            "witness": _witness(report.witness),
            "certified_order": report.certified_order,
            "conditional_on": [f"{to_string(e)} = c" for e in report.conditional_on],
            "notes": list(report.notes),
        },
        "timings": {k: round(v, 6) for k, v in report.timings.items()} if timings else None,
        "seed": cfg.seed,
        "version": __version__,
    }


def _witness(w):
    if w is None:
        return None
    return {"points": [[_frac(v) for v in p] for p in w["points"]], "values": [_frac(v) for v in w["values"]]}


def symbol_payload(sym, samples) -> dict:
    return {
        "q": sym.q,
        "dims": sym.dims,
        "cohomology": [{"order": r, "degree": s, "dim": d} for (r, s), d in sorted(sym.cohomology.items())],
        "cartan_characters": sym.cartan_characters,
        "character_sum": sym.character_sum,
        "two_acyclic": sym.two_acyclic,
        "involutive": sym.involutive,
        "finite_type": sym.finite_type,
        "euler_ok": sym.euler_ok,
        "delta_squared_zero": sym.delta_squared_zero,
        "rank_samples": samples,
    }


def vessiot_payload(v) -> dict:
    eqs = []
    for se in v.equations:
        eqs.append(
            {
                "status": se.status,
                "order": se.order,
                "invariant": _expr(se.invariant),
                "equation": f"{to_string(se.invariant)} = c" if se.separated else None,
                "weights": se.weights,
                "reference_factor": None if se.reference_factor is None else _frac(se.reference_factor),
                "condition_terms": se.condition.term_count(),
                "condition": to_string(se.condition),
            }
        )
    concrete = []
    for c in v.concrete:
        concrete.append(
            {
                "invariant": to_string(c["invariant"]),
                "value": to_string(c["value"]),
                "constant": c["constant"],
                "curvature": _expr(c.get("curvature")),
            }
        )
    return {"structure_equations": eqs, "concrete": concrete}


def render_text_derive(p: dict) -> str:
    cfg = p["config"]
    lines = [f"object: {cfg['object'] or cfg['dsl']}  dim: {cfg['dim']}  section: {cfg['section']}", ""]
    lines.append("order  eqs  rows x unknowns  rank  numeric ranks  conditions  certificate")
    for it in p["iterations"]:
        lines.append(
            f"{it['order']:>5}  {it['equations']:>3}  {it['rows']:>4} x {it['unknowns']:<8}  {it['generic_rank']:>4}"
            f"  {str(it['numeric_ranks']):<13}  {it['condition_count']:>10}  {it['certificate']}"
        )
    lines.append("")
    lines.extend(render_text_symbol(p["symbol"]).splitlines())
    lines.append("")
    eqs = p["vessiot"]["structure_equations"]
    lines.append(f"structure equations: {len(eqs)}")
    for e in eqs:
        if e["equation"]:
            lines.append(f"  {e['equation']}")
            if e["reference_factor"]:
                lines.append(f"    invariant / Brioschi curvature = {e['reference_factor']}")
        else:
            lines.append(f"  UNSEPARATED condition ({e['condition_terms']} terms): {e['condition']}")
    for c in p["vessiot"]["concrete"]:
        lines.append(f"  on this object: invariant = {c['value']}")
        if c["curvature"] is not None:
            lines.append(f"    Gaussian curvature = {c['curvature']}")
    v = p["verdict"]
    lines.append("")
    lines.append(f"verdict: {v['status']}")
    if v["certified_order"] is not None:
        lines.append(f"  certified at order {v['certified_order']}")
    if v["conditional_on"]:
        lines.append("  provided the structure equations hold")
    if v["obstruction"]:
        lines.append(f"  obstruction: {v['obstruction']}")
    for note in v["notes"]:
        lines.append(f"  note: {note}")
    if v["witness"]:
        w = v["witness"]
        for pt, val in zip(w["points"], w["values"]):
            lines.append(f"    at x = ({', '.join(pt)}): {val}")
    return "\n".join(lines) + "\n"


def render_text_symbol(s: dict) -> str:
    q = s["q"]
    lines = ["order  dim g"]
    for r, d in enumerate(s["dims"]):
        lines.append(f"{q + r:>5}  {d:>5}")
    lines.append("spencer cohomology: " + ", ".join(f"H^{c['order']},{c['degree']}={c['dim']}" for c in s["cohomology"]))
    lines.append(f"cartan characters: {s['cartan_characters']} (sum {s['character_sum']})")
    lines.append(
        f"two_acyclic: {str(s['two_acyclic']).lower()}  involutive: {str(s['involutive']).lower()}"
        f"  finite_type: {str(s['finite_type']).lower()}"
    )
    return "\n".join(lines) + "\n"


_TEX_ATOM = re.compile(r"J\[(\d+),([\d,]+)\]|([A-Za-z_][A-Za-z0-9_]*)(?:\[([\d,]+)\])?@([xy])|\bx(\d+)\b|\by(\d+)\b")


def tex_expr(text: str) -> str:
    """Expression-grammar string to LaTeX math."""

    def atom(m):
        if m.group(1):
            return f"y^{{{m.group(1)}}}_{{{m.group(2).replace(',', '')}}}"
        if m.group(3):
            name = m.group(3)
            body = name[1:] if name.startswith("u") else name
            sub = body + (("," + m.group(4).replace(",", "")) if m.group(4) else "")
            return f"\\omega_{{{sub}}}({m.group(5)})"
        if m.group(6):
            return f"x^{{{m.group(6)}}}"
        return f"y^{{{m.group(7)}}}"

    out = _TEX_ATOM.sub(atom, text)
    out = re.sub(r"\^(\d+)", r"^{\1}", out)
    return out.replace("*", r"\,")


def render_latex(p: dict, kind: str) -> str:
    lines = [
        r"\documentclass{article}",
        r"\usepackage{amsmath}",
        r"\begin{document}",
        r"\section*{" + ("Formal integrability report" if kind == "derive" else "Symbol report") + "}",
    ]
    s = p["symbol"]
    lines += [r"\begin{tabular}{rr}", r"order & $\dim g$ \\ \hline"]
    for r, d in enumerate(s["dims"]):
        lines.append(f"{s['q'] + r} & {d} \\\\")
    lines += [r"\end{tabular}", ""]
    lines.append(
        f"Cartan characters: {s['cartan_characters']}; involutive: {s['involutive']}; "
        f"2-acyclic: {s['two_acyclic']}; finite type: {s['finite_type']}."
    )
    if kind == "derive":
        lines += ["", r"\begin{tabular}{rrrrr}", r"order & rows & unknowns & rank & conditions \\ \hline"]
        for it in p["iterations"]:
            lines.append(f"{it['order']} & {it['rows']} & {it['unknowns']} & {it['generic_rank']} & {it['condition_count']} \\\\")
        lines += [r"\end{tabular}", "", r"\subsection*{Structure equations}"]
        for e in p["vessiot"]["structure_equations"]:
            if e["invariant"]:
                lines += [r"\begin{multline*}", tex_expr(e["invariant"]) + r" = c", r"\end{multline*}"]
            else:
                lines.append(f"Unseparated condition with {e['condition_terms']} terms.")
        v = p["verdict"]
        lines += ["", r"\subsection*{Verdict}", v["status"].replace("_", r"\_") + "."]
        if v["obstruction"]:
            lines.append("Obstruction: " + v["obstruction"] + ".")
    lines.append(r"\end{document}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_derive(cfg: JobConfig, timings: bool = False) -> tuple[str, int]:
    a = load_action(cfg)
    omega = parse_section(cfg.section, a)
    with term_cap(cfg.term_cap), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = integrability_loop(
            a, omega, cfg.max_order, seed=cfg.seed, r_max=cfg.r_max, exhaustive=cfg.exhaustive
        )
    payload = derive_payload(report, cfg, timings)
    return _emit(payload, cfg.format, "derive"), EXIT[report.verdict]


def cmd_symbol(cfg: JobConfig) -> tuple[str, int]:
    from .spencer import analyse_symbol, symbol_dims

    a = load_action(cfg)
    omega = parse_section(cfg.section, a)
    S = lie_form(a, omega)
    rng = random.Random(cfg.seed)
    identity = not omega.is_symbolic
    pt = admissible_point(a, omega, a.q, rng, identity=identity)
    rep = analyse_symbol(S, a.q, cfg.r_max, pt, a)
    samples = [symbol_dims(S, a.q, cfg.r_max, admissible_point(a, omega, a.q, rng, identity=identity), a) for _ in range(5)]
    payload = {
        "config": asdict(cfg),
        "symbol": symbol_payload(rep, samples),
        "seed": cfg.seed,
        "version": __version__,
    }
    return _emit(payload, cfg.format, "symbol"), 0


def cmd_check(cfg: JobConfig) -> tuple[str, int]:
    a = load_action(cfg)
    rep = check_action_axioms(a, cfg.trials, cfg.seed)
    failures = []
    for f in rep.failures:
        if f["axiom"] == "identity":
            failures.append({"axiom": "identity", "component": f["component"]})
        else:
            failures.append(
                {
                    "axiom": "composition",
                    "u": {k: str(v) for k, v in f["u"].items()},
                    "g": jet_literal(f["g"]),
                    "f": jet_literal(f["f"]),
                    "u(gf)": {k: str(v) for k, v in f["u(gf)"].items()},
                    "(ug)f": {k: str(v) for k, v in f["(ug)f"].items()},
                }
            )
    payload = {
        "action": a.name,
        "identity_ok": rep.identity_ok,
        "composition_ok": rep.composition_ok,
        "trials": rep.trials,
        "seed": rep.seed,
        "failures": failures,
    }
    if cfg.format == "json":
        out = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [
            f"action {a.name}: identity {'pass' if rep.identity_ok else 'FAIL'}, "
            f"composition {'pass' if rep.composition_ok else 'FAIL'} ({rep.trials} trials, seed {rep.seed})"
        ]
        for f in failures[:3]:
            lines.append(json.dumps(f))
        out = "\n".join(lines) + "\n"
    return out, 0 if rep.ok else 2


def _emit(payload, fmt, kind):
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "latex":
        return render_latex(payload, kind)
    if kind == "derive":
        return render_text_derive(payload)
    return render_text_symbol(payload["symbol"])


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _job_flags(p):
    p.add_argument("--config", help="JSON job configuration; explicit flags override it")
    p.add_argument("--object", help="builtin action: metric, volume, twoform, covector")
    p.add_argument("--dim", type=int, help="base dimension")
    p.add_argument("--dsl", help="action file in the object DSL")
    p.add_argument("--section", help="'symbolic' or assignments such as 'u11=1,u12=0,u22=1'")
    p.add_argument("--max-order", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--r-max", type=int)
    p.add_argument("--term-cap", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jetgroupoid", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    d = sub.add_parser("derive", help="structure equations and integrability verdict")
    _job_flags(d)
    d.add_argument("--exhaustive", action="store_true", default=None, help="keep prolonging after a certificate")
    d.add_argument("--timings", action="store_true", help="include wall-clock timings (output is then not reproducible)")
    s = sub.add_parser("symbol", help="symbol dimensions, Spencer cohomology and Cartan test")
    _job_flags(s)
    c = sub.add_parser("check", help="verify the groupoid-action axioms")
    _job_flags(c)
    c.add_argument("--trials", type=int)
    cp = sub.add_parser("compose", help="compose two jets: g o f")
    cp.add_argument("g", help="jet literal (JSON text or file)")
    cp.add_argument("f", help="jet literal (JSON text or file)")
    cp.add_argument("--order", type=int)
    iv = sub.add_parser("invert", help="invert a jet")
    iv.add_argument("f", help="jet literal (JSON text or file)")
    iv.add_argument("--order", type=int)
    return parser


def config_from_args(args) -> JobConfig:
    cfg = JobConfig(command=args.command)
    if getattr(args, "config", None):
        cfg = JobConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        cfg.command = args.command
    for name in ("object", "dim", "dsl", "section", "max_order", "seed", "format", "r_max", "term_cap", "trials", "exhaustive"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("compose", "invert"):
            if args.command == "compose":
                g = parse_jet_literal(args.g)
                f = parse_jet_literal(args.f)
                out = compose_jets(g, f, args.order)
            else:
                out = invert_jet(parse_jet_literal(args.f), args.order)
            sys.stdout.write(json.dumps(jet_literal(out), indent=2) + "\n")
            return 0
        cfg = config_from_args(args)
        if cfg.format not in FORMATS:
            raise ValueError(f"unknown format {cfg.format!r}")
        if args.command == "derive":
            text, code = cmd_derive(cfg, timings=args.timings)
        elif args.command == "symbol":
            text, code = cmd_symbol(cfg)
        else:
            text, code = cmd_check(cfg)
        sys.stdout.write(text)
        return code
    except (JetGroupoidError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        name = type(err).__name__
        msg = err.args[0] if isinstance(err, KeyError) and err.args else err
        print(f"jetgroupoid: {name}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
