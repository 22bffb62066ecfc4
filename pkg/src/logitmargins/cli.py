"""Command-line interface: fit, margins, summarize, synth.

See README for the flag grammar.  All file outputs are deterministic given
identical flags and seed.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import dataset as ds_mod
from . import logit as logit_mod
from . import margins as mg
from . import synth as synth_mod
from .dataset import ColumnSpec, DataError
from .formula import FormulaError, Factor, Linear, Power, build_design, parse_formula
from .svgplot import PlotSpec, Series, render


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _caret(text: str, exc: FormulaError) -> None:
    _err(str(exc))
    if exc.position is not None:
        print(f"  {text}", file=sys.stderr)
        print("  " + " " * exc.position + "^", file=sys.stderr)


def _parse_schema_arg(text: str) -> list[ColumnSpec]:
    """Parse 'name:kind,name:kind[lev1|lev2],...' into column specs."""
    specs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        levels = None
        if "[" in part:
            part, _, rest = part.partition("[")
            if not rest.endswith("]"):
                raise DataError(f"unterminated level list in schema near {part!r}")
            levels = tuple(rest[:-1].split("|"))
        name, sep, kind = part.partition(":")
        if not sep:
            raise DataError(f"schema entry {part!r} needs name:kind")
        specs.append(ColumnSpec(name.strip(), kind.strip(), levels=levels))
    return specs


def _schema_from_formula(spec) -> list[ColumnSpec]:
    out = [ColumnSpec(spec.response, "binary")]
    seen = {spec.response}
    for term in spec.terms:
        if term.var in seen:
            continue
        seen.add(term.var)
        kind = "categorical" if isinstance(term, Factor) else "continuous"
        out.append(ColumnSpec(term.var, kind))
    return out


def _load_data(args, model_spec=None, term_map=None):
    if getattr(args, "schema", None):
        schema = _parse_schema_arg(args.schema)
    elif model_spec is not None:
        schema = _schema_from_formula(model_spec)
        if term_map is not None:
            # pin level order from the stored model so dummy coding matches
            schema = [
                ColumnSpec(s.name, s.kind, levels=term_map.factor_levels.get(s.name))
                if s.kind == "categorical" else s
                for s in schema
            ]
    else:
        schema = ds_mod.sniff_schema(args.data)
    ds = ds_mod.load_csv(args.data, schema)
    if ds.n_dropped:
        print(f"note: dropped {ds.n_dropped} row(s) with missing values",
              file=sys.stderr)
    return ds


def _parse_refs(values) -> dict[str, str]:
    refs = {}
    for v in values or ():
        var, sep, level = v.partition("=")
        if not sep:
            raise DataError(f"--ref needs VAR=LEVEL, got {v!r}")
        refs[var.strip()] = level.strip()
    return refs


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def cmd_fit(args) -> int:
    try:
        spec = parse_formula(args.model)
    except FormulaError as exc:
        _caret(args.model, exc)
        return 2
    try:
        ds = _load_data(args, model_spec=spec)
        design = build_design(ds, spec, reference=_parse_refs(args.ref))
        fr = logit_mod.fit(design, max_iter=args.max_iter, tol=args.tol)
        stats = logit_mod.fit_stats(fr)
    except (DataError, FormulaError, logit_mod.FitError) as exc:
        _err(str(exc))
        return 1

    labels = design.term_map.labels
    width = max(len(l) for l in labels) + 2
    print(f"{'term':<{width}}{'coef':>12}  {'(z)':>9}")
    for j, label in enumerate(labels):
        coef = f"{fr.beta[j]:.4g}{_stars(stats.p[j])}"
        print(f"{label:<{width}}{coef:>12}  ({stats.z[j]:.2f})")
    print("-" * (width + 24))
    print(f"{'N':<{width}}{fr.n:>12}")
    print(f"{'pseudo R2':<{width}}{stats.pseudo_r2:>12.3f}")
    print(f"{'AIC':<{width}}{stats.aic:>12.1f}")
    print(f"{'BIC':<{width}}{stats.bic:>12.1f}")
    print(f"{'chi2':<{width}}{stats.lr_chi2:>12.1f}")
    print(f"{'D.F.':<{width}}{stats.df:>12}")
    print("* p < 0.05, ** p < 0.01, *** p < 0.001")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(logit_mod.to_json(fr, args.model))
    return 0


def _parse_factor_arg(text: str) -> tuple[str, bool, Optional[str]]:
    """'C(univ)' -> (univ, True, None); 'C(univ),u2' -> (univ, True, 'u2');
    'jif' -> (jif, False, None)."""
    base = None
    body = text.strip()
    if body.startswith("C(") or body.startswith("c("):
        close = body.find(")")
        if close < 0:
            raise mg.MarginsError(f"unterminated C( in {text!r}")
        var = body[2:close].strip()
        rest = body[close + 1:].strip()
        if rest.startswith(","):
            base = rest[1:].strip()
        elif rest:
            raise mg.MarginsError(f"trailing text {rest!r} after C({var})")
        return var, True, base
    if "," in body:
        var, _, base = body.partition(",")
        return var.strip(), False, base.strip()
    return body, False, None


# conventional grids for the corpus variables; any explicit range overrides
DEFAULT_GRIDS = {"jif": (0.0, 35.0, 1.0), "pages": (1.0, 120.0, 1.0)}
DEFAULT_GRIDS_BY_LEVEL = {"jif": (0.0, 13.0, 0.5), "pages": (1.0, 25.0, 1.0)}


def _parse_at(text: str, per_level: bool = False) -> tuple[str, tuple[float, ...]]:
    var, sep, rng = text.partition("=")
    var = var.strip()
    if not sep:
        defaults = DEFAULT_GRIDS_BY_LEVEL if per_level else DEFAULT_GRIDS
        if var in defaults:
            lo, hi, step = defaults[var]
        else:
            raise mg.MarginsError(f"--at needs VAR=LO:HI:STEP "
                                  f"(no default grid for {var!r})")
    else:
        pieces = rng.split(":")
        if len(pieces) != 3:
            raise mg.MarginsError(f"--at range must be LO:HI:STEP, got {rng!r}")
        lo, hi, step = (float(p) for p in pieces)
    if step <= 0 or hi < lo:
        raise mg.MarginsError(f"bad --at range {rng!r}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    grid = tuple(lo + i * step for i in range(count))
    return var, grid


def _build_requests(args, term_map) -> list[mg.MarginRequest]:
    """Translate margins flags into requests; see README for valid combinations."""
    n_main = sum(1 for f in (args.aap, args.ame) if f)
    at = _parse_at(args.at) if args.at else None
    atmeans = args.atmeans
    ci = args.ci

    def kind(pred: bool) -> str:
        if pred:
            return "apm" if atmeans else "aap"
        return "mem" if atmeans else "ame"

    if args.over:
        if at is None:
            raise mg.MarginsError("--over requires an --at grid")
        if n_main:
            raise mg.MarginsError("--over cannot be combined with --aap/--ame")
        var, is_factor, base = _parse_factor_arg(args.over)
        if not is_factor:
            raise mg.MarginsError("--over takes a factor, e.g. --over C(univ)")
        return [mg.MarginRequest(kind=kind(not args.dydx), target=var, base=base,
                                 at=at, ci_level=ci)]
    if args.aap:
        if args.ame:
            raise mg.MarginsError("--aap and --ame are mutually exclusive")
        var, is_factor, _ = _parse_factor_arg(args.aap)
        if is_factor:
            if at is not None:
                raise mg.MarginsError("use --over C(...) --at ... for APRV curves")
            return [mg.MarginRequest(kind=kind(True), target=var, ci_level=ci),
                    mg.MarginRequest(kind=kind(False), target=var, ci_level=ci)]
        if at is None or at[0] != var:
            raise mg.MarginsError(f"--aap {var} needs --at {var}=LO:HI:STEP")
        return [mg.MarginRequest(kind=kind(True), target=var, at=at, ci_level=ci)]
    if args.ame:
        var, is_factor, base = _parse_factor_arg(args.ame)
        if is_factor:
            if at is not None:
                raise mg.MarginsError("use --over C(...) --at ... --dydx for MERV curves")
            return [mg.MarginRequest(kind=kind(False), target=var, base=base,
                                     ci_level=ci)]
        req_at = at if at is not None and at[0] == var else None
        if at is not None and req_at is None:
            raise mg.MarginsError(f"--at grid variable must be {var}")
        return [mg.MarginRequest(kind=kind(False), target=var, at=req_at,
                                 ci_level=ci, discrete=args.discrete)]
    if at is not None:
        return [mg.MarginRequest(kind=kind(not args.dydx), target=at[0], at=at,
                                 ci_level=ci, discrete=args.discrete)]
    raise mg.MarginsError("nothing requested: use --aap, --ame, --at, or --over")


def _human_margins(rows) -> str:
    width = max(len(r.label) for r in rows) + 2
    lines = [f"{'':<{width}}{'at':>8}{'estimate':>10}{'std err':>10}"
             f"{'z':>9}{'p':>8}  [95% CI]"]
    for r in rows:
        at = "" if r.at_value is None else f"{r.at_value:g}"
        lines.append(
            f"{r.label:<{width}}{at:>8}{r.estimate:>10.4g}{r.se:>10.4g}"
            f"{r.z:>9.2f}{r.p:>8.3f}  [{r.ci_low:.4g}, {r.ci_high:.4g}]"
            + ("  (extrapolated)" if r.extrapolated else ""))
    return "\n".join(lines)


def _plot_rows(rows, path, at_var: str, predictions: bool) -> None:
    by_label: dict[str, list] = {}
    for r in rows:
        if r.at_value is None:
            raise mg.MarginsError("--plot requires margins over an --at grid")
        by_label.setdefault(r.label, []).append(r)
    series = tuple(
        Series(name=label,
               x=tuple(r.at_value for r in rs),
               estimate=tuple(r.estimate for r in rs),
               low=tuple(r.ci_low for r in rs),
               high=tuple(r.ci_high for r in rs))
        for label, rs in by_label.items())
    spec = PlotSpec(x_label=at_var,
                    y_label="adjusted prediction" if predictions else "marginal effect",
                    series=series,
                    y_range=(0.0, 1.0) if predictions else None)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(spec))
    with open(f"{path}.csv", "w", encoding="utf-8") as fh:
        fh.write("series,at,estimate,ci_low,ci_high\n")
        for label, rs in by_label.items():
            for r in rs:
                fh.write(f"{label},{r.at_value:.17g},{r.estimate:.17g},"
                         f"{r.ci_low:.17g},{r.ci_high:.17g}\n")


def cmd_margins(args) -> int:
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            fr, formula_text = logit_mod.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        _err(f"cannot read model JSON {args.model}: {exc}")
        return 1
    try:
        spec = parse_formula(formula_text)
    except FormulaError as exc:
        _caret(formula_text, exc)
        return 2
    try:
        ds = _load_data(args, model_spec=spec, term_map=fr.term_map)
        design = build_design(ds, spec, reference=fr.term_map.reference,
                              levels=fr.term_map.factor_levels)
        requests = _build_requests(args, fr.term_map)
        rows = []
        for req in requests:
            if args.vce == "bootstrap":
                res = mg.bootstrap_se(design, req, args.reps, args.seed)
                rows.extend(res.rows)
                if res.failures:
                    print(f"note: {res.failures}/{res.replicates} bootstrap "
                          "replicates failed and were skipped", file=sys.stderr)
            else:
                rows.extend(mg.compute_margins(fr, design, req))
    except (DataError, FormulaError, logit_mod.FitError, mg.MarginsError) as exc:
        _err(str(exc))
        return 1

    flagged = [r for r in rows if r.extrapolated]
    if flagged:
        uniq = sorted({r.at_value for r in flagged})
        vals = ", ".join(f"{v:g}" for v in uniq[:8])
        more = "" if len(uniq) <= 8 else f" (+{len(uniq) - 8} more)"
        print(f"warning: {len(flagged)} row(s) evaluated outside the observed "
              f"range at {vals}{more}", file=sys.stderr)

    print(_human_margins(rows))
    try:
        if args.table:
            with open(args.table, "w", encoding="utf-8") as fh:
                fh.write(mg.margins_tsv(rows))
        if args.plot:
            predictions = all(not r.label.startswith(("AME", "MEM", "MERV"))
                              for r in rows)
            at_var = _parse_at(args.at)[0] if args.at else ""
            _plot_rows(rows, args.plot, at_var, predictions)
    except (OSError, mg.MarginsError) as exc:
        _err(str(exc))
        return 1
    return 0


def cmd_summarize(args) -> int:
    try:
        ds = _load_data(args)
        table = ds_mod.summarize(ds)
    except DataError as exc:
        _err(str(exc))
        return 1
    print(f"{'variable':<28}{'%/mean':>10}{'sd':>10}{'min':>10}{'max':>10}")
    for row in table.rows:
        name = row.variable if row.level is None else f"{row.variable}={row.level}"
        col = ds.column(row.variable)
        if col.kind == "continuous":
            value = f"{row.value:.4g}"
        else:
            value = f"{row.value:.1f}%"
        sd = "—" if row.sd is None else f"{row.sd:.4g}"
        print(f"{name:<28}{value:>10}{sd:>10}{row.vmin:>10.4g}{row.vmax:>10.4g}")
    print(f"n = {ds.n_rows}")
    return 0


def cmd_synth(args) -> int:
    try:
        cfg = synth_mod.default_config(args.n, args.seed, correlated=args.correlated,
                                       coeffs=args.coeffs)
        ds = synth_mod.generate(cfg)
        ds_mod.to_csv(ds, args.out)
    except (synth_mod.SynthError, DataError, FormulaError, OSError) as exc:
        _err(str(exc))
        return 1
    print(f"wrote {ds.n_rows} rows to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logitmargins",
                                 description="Binary logit models with adjusted "
                                             "predictions and marginal effects.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a logit model and write model JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="formula, e.g. 'y ~ C(g) + x + x^2'")
    p.add_argument("--schema", help="name:kind[,...] override for column typing")
    p.add_argument("--ref", action="append", metavar="VAR=LEVEL",
                   help="reference level override (repeatable)")
    p.add_argument("--out", help="path for the model JSON")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("margins", help="adjusted predictions and marginal effects")
    p.add_argument("--model", required=True, help="model JSON from `fit`")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--aap", metavar="TARGET", help="adjusted predictions: C(factor) "
                   "for a discrete block, or a continuous var with --at")
    p.add_argument("--ame", metavar="TARGET[,BASE]", help="marginal effects")
    p.add_argument("--at", metavar="VAR=LO:HI:STEP", help="grid of representative values")
    p.add_argument("--over", metavar="C(FACTOR)[,BASE]",
                   help="one curve per factor level over the --at grid")
    p.add_argument("--dydx", action="store_true",
                   help="effects instead of predictions for grid requests")
    p.add_argument("--discrete", action="store_true",
                   help="unit-change effects instead of instantaneous derivatives")
    p.add_argument("--atmeans", action="store_true",
                   help="evaluate at a single row of sample means")
    p.add_argument("--vce", choices=("delta", "bootstrap"), default="delta")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ci", type=float, default=0.95)
    p.add_argument("--plot", metavar="OUT.svg")
    p.add_argument("--table", metavar="OUT.tsv")
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("summarize", help="descriptive table for a CSV file")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("synth", help="generate a synthetic corpus CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--coeffs", default=synth_mod.DEFAULT_COEFFS,
                   help="coefficient JSON (path or bundled name)")
    p.add_argument("--correlated", action="store_true",
                   help="shift journal-impact means per university")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
