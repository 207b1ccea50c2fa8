"""Command-line front end: ``levyqueue <command> ...``.

Exit codes: 0 success or all comparisons pass, 1 invalid model, numerical
failure or a failed comparison, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import BACKEND, __version__, inversion, simulator, transforms
from .levy_model import InvalidModelError, ModelParseError, load_model, require_valid, validate
from .wiener_hopf import FactorizationError, factorize

LAPLACE_ARGS = ("theta", "alpha", "beta", "gamma", "u", "v", "w", "lambda")


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``a:b:n`` (inclusive, n points), ``x,y,z``, or a single number."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(a), float(b), n)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad grid {text!r}: use a:b:n, a comma list, or a number") from None


def _manifest(args, command: str, extra: dict | None = None) -> dict:
    m = {"tool": f"levyqueue {__version__}", "command": command}
    if getattr(args, "model", None):
        path = Path(args.model)
        m["model"] = str(path)
        m["model_sha256"] = hashlib.sha256(path.read_bytes()).hexdigest()
    grids = {k: getattr(args, _dest(k)) for k in ("q",) + LAPLACE_ARGS
             if getattr(args, _dest(k), None) is not None}
    if grids:
        m["grids"] = grids
    for k in ("formula", "samples", "seed", "mode", "step"):
        if getattr(args, k, None) is not None:
            m[k] = getattr(args, k)
    if getattr(args, "out", None):
        m["output"] = args.out
    # wall-clock time would break byte-identical reruns
    m["timestamp"] = os.environ.get("SOURCE_DATE_EPOCH", "unset")
    if extra:
        m.update(extra)
    return m


def _header(manifest: dict) -> str:
    return "".join(f"# {k}: {json.dumps(v) if not isinstance(v, str) else v}\n"
                   for k, v in manifest.items())


def _dest(name: str) -> str:
    return "lam" if name == "lambda" else name


def _emit(args, manifest: dict, columns: list[str], rows: list[list], text: str | None = None):
    if args.json:
        payload = {"manifest": manifest, "columns": columns, "rows": rows}
        body = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        buf.write(_header(manifest))
        if text is not None:
            buf.write(text)
        else:
            buf.write(",".join(columns) + "\n")
            for r in rows:
                buf.write(",".join(_fmt(v) for v in r) + "\n")
        body = buf.getvalue()
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load(args):
    model = load_model(args.model)
    require_valid(model)
    return model


def _arg_points(args, formula: str):
    """Cartesian product of the formula's argument grids, in declaration order."""
    spec = transforms.FORMULAS.get(formula)
    if spec is None:
        raise UsageError(f"unknown formula {formula!r}; known: {', '.join(transforms.FORMULAS)}")
    grids = []
    for name in spec.args:
        raw = getattr(args, _dest(name), None)
        if raw is None:
            if name == "q" or name == "lambda":
                raise UsageError(f"formula {formula!r} needs --{name}")
            raw = "0"
        grids.append(parse_grid(raw))
    for name in ("q",) + LAPLACE_ARGS:
        if name not in spec.args and getattr(args, _dest(name), None) is not None:
            raise UsageError(f"formula {formula!r} does not take --{name}")
    return spec.args, [dict(zip(spec.args, p)) for p in itertools.product(*grids)]


# --- commands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        model = load_model(args.model)
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    report = validate(model)
    print(report)
    return 0 if report.ok else 1


def cmd_wh(args) -> int:
    model = _load(args)
    text = "".join(factorize(model, q).dump() for q in parse_grid(args.q))
    _emit_text(args, _manifest(args, "wh"), text)
    return 0


def _emit_text(args, manifest, text):
    if args.json:
        _emit(args, manifest, ["dump"], [[text]])
    else:
        _emit(args, manifest, [], [], text=text)


def cmd_transform(args) -> int:
    model = _load(args)
    names, points = _arg_points(args, args.formula)
    rows = []
    for p in points:
        v = transforms.evaluate(model, args.formula, **p)
        rows.append([p[n] for n in names] + [v.real])
    _emit(args, _manifest(args, "transform"), list(names) + ["value"], rows)
    return 0


def _estimates(model, args):
    """One simulated batch per (q, lambda) grid point; every Laplace point reuses it."""
    names, points = _arg_points(args, args.formula)
    if "q" not in names:
        raise UsageError(f"formula {args.formula!r} has no path functional")
    batches = {}
    out = []
    for p in points:
        key = (p["q"], p.get("lambda"))
        if key not in batches:
            cfg = simulator.SimConfig(p["q"], args.samples, args.seed, args.mode, args.step,
                                      workers=args.workers)
            initial = simulator.exponential(p["lambda"]) if "lambda" in p else None
            batches[key] = simulator.simulate(model, cfg, initial)
        lap = {k: v for k, v in p.items() if k != "q"}
        try:
            fn = simulator.functional_for(args.formula, **lap)
        except simulator.ConfigError as exc:
            raise UsageError(str(exc)) from None
        est = simulator.estimate_from_batch(batches[key], fn)
        out.append((p, est))
    if args.paths_out:
        first = next(iter(batches.values()))
        with open(args.paths_out, "w") as fh:
            first.write_csv(fh, _header(_manifest(args, "simulate", {"paths_of_q": points[0]["q"]})))
    meta = {"backend": BACKEND}
    first = next(iter(batches.values()))
    meta.update(first.meta)
    if args.mode == "grid":
        meta["time_readings"] = f"right end of grid cell, bias O({args.step})"
    return names, out, meta


def cmd_simulate(args) -> int:
    model = _load(args)
    names, ests, meta = _estimates(model, args)
    rows = [[p[n] for n in names] + [e.mean, e.se, e.ci_low, e.ci_high, e.n] for p, e in ests]
    _emit(args, _manifest(args, "simulate", meta), list(names) + ["mean", "se", "ci_low", "ci_high", "n"], rows)
    return 0


def cmd_compare(args) -> int:
    model = _load(args)
    names, ests, meta = _estimates(model, args)
    rows, ok = [], True
    for p, e in ests:
        analytic = transforms.evaluate(model, args.formula, **p)
        if args.perturb_se:
            analytic = transforms.TransformValue(
                analytic.formula, analytic.args, analytic.real + args.perturb_se * e.se
            )
        c = simulator.compare(analytic, e)
        ok &= c.passed
        rows.append([p[n] for n in names] + [c.analytic, e.mean, e.se, c.z, c.passed])
    meta["pass_rule"] = f"|z| <= {simulator.Z_PASS:g}"
    _emit(args, _manifest(args, "compare", meta),
          list(names) + ["analytic", "mean", "se", "z", "result"], rows)
    return 0 if ok else 1


def cmd_invert(args) -> int:
    model = _load(args)
    q = parse_grid(args.q)[0] if args.q is not None else None
    fixed = {}
    for name in ("alpha", "lambda"):
        raw = getattr(args, _dest(name), None)
        if raw is not None:
            fixed[name] = parse_grid(raw)[0]
    xs = parse_grid(args.x)
    req = inversion.formula_request(model, args.formula, xs, q=q, **fixed)
    rows = [[x, f] for x, f in inversion.invert_cdf(req)]
    _emit(args, _manifest(args, "invert", {"atom_at_zero": req.atom_at_zero,
                                           "x": args.x}), ["x", "F"], rows)
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levyqueue", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"levyqueue {__version__} ({BACKEND})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grids=True):
        sp.add_argument("--model", required=True, help="model file (key = value lines)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--json", action="store_true", help="JSON instead of CSV")
        if grids:
            sp.add_argument("--q", help="killing-rate grid")
            for name in LAPLACE_ARGS:
                sp.add_argument(f"--{name}", dest=_dest(name), help=f"{name} grid (a:b:n or list)")

    sp = sub.add_parser("validate", help="check model invariants")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("wh", help="dump the ladder factorization per q")
    common(sp, grids=False)
    sp.add_argument("--q", default="1", help="killing-rate grid")
    sp.set_defaults(func=cmd_wh)

    sp = sub.add_parser("transform", help="evaluate a closed-form transform over a grid")
    sp.add_argument("formula", help="formula id: " + ", ".join(transforms.FORMULAS))
    common(sp)
    sp.set_defaults(func=cmd_transform)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "Monte Carlo estimates of a transform"),
        ("compare", cmd_compare, "Monte Carlo vs closed form, pass iff |z| <= 3"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("formula")
        common(sp)
        sp.add_argument("--samples", type=int, default=100_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mode", choices=("exact", "grid"), default="exact")
        sp.add_argument("--step", type=float, default=1e-3, help="grid step (grid mode)")
        sp.add_argument("--workers", type=int, default=1, help="threads (results do not depend on it)")
        sp.add_argument("--paths-out", help="also write per-path observables of the first q")
        if name == "compare":
            sp.add_argument("--perturb-se", type=float, default=0.0,
                            help="shift analytic values by this many SE (harness self-test)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("invert", help="CDF by numerical Laplace inversion")
    sp.add_argument("formula")
    common(sp)
    sp.add_argument("--x", required=True, help="x grid (positive, increasing)")
    sp.set_defaults(func=cmd_invert)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, simulator.ConfigError, TypeError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except InvalidModelError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (FactorizationError, inversion.InversionError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
