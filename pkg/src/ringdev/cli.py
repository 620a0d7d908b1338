"""Command-line front end: ``ringdev <command> [options]``.

Commands: analyze, critical, phase, route, simulate, reproduce.  Every
option may also come from a JSON document given with ``--config``; flags
on the command line win.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import critical_rates as cr
from .distributions import MessageLengthModel
from .errors import RingDevError
from .ldp_rates import NetworkParams, optimal_profile, scenario, solve_theta_l, solve_theta_star
from .routing import is_balanced, maximal_balanced_sets, solve_O1, solve_O2
from .simulator import SimConfig, estimate_overload, event_log, events_to_csv, overheat_census

DEFAULTS = {
    "d": 1.0,
    "n": 10.0,
    "trials": 10_000,
    "seed": 0,
    "format": None,
    "tol": 0.002,
    "eps": 0.1,
    "a_min": 1.0,
}


def sig(x, digits=9):
    """Round floats (recursively) to ``digits`` significant digits; non-finite become None."""
    if isinstance(x, dict):
        return {str(k): sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig(v, digits) for v in x]
    if isinstance(x, np.ndarray):
        return sig(x.tolist(), digits)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{digits}g}")
    return x


def emit_json(obj) -> str:
    return json.dumps(sig(obj), indent=2, allow_nan=False)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (f"{v:.9g}" if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _table(header, rows) -> str:
    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)
    cells = [header] + [[fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    lines = ["  ".join(c[i].ljust(widths[i]) for i in range(len(header))) for c in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (stop inclusive within half a step) or a comma list."""
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad grid {text!r}; expected start:stop:step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 0.5)) + 1
        return start + step * np.arange(count)
    return np.array([float(v) for v in text.split(",") if v.strip()])


def parse_slopes(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v.strip()])


def parse_subset(text: str, k: int) -> list[int]:
    """1-based cyclic range ``i..j`` -> 0-based flow indices in ring order."""
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ValueError(f"bad subset {text!r}; expected i..j")
    i, j = int(lo), int(hi)
    if not (1 <= i <= k and 1 <= j <= k):
        raise ValueError(f"subset {text!r} outside 1..{k}")
    length = (j - i) % k + 1
    return [(i - 1 + s) % k for s in range(length)]


# -- commands -------------------------------------------------------------------

def _params(args) -> NetworkParams:
    if args.k is None or args.lam is None:
        raise ValueError("--k and --lambda are required")
    return NetworkParams(int(args.k), float(args.lam), float(args.d), MessageLengthModel.parse(args.dist))


def cmd_analyze(args) -> tuple[int, str]:
    p = _params(args)
    rep = scenario(p)
    profiles = {}
    for l in range(1, p.k + 1):
        if l in rep.J:
            prof = optimal_profile(p, l)
            profiles[l] = {"theta": prof.theta, "J": prof.J, "a": prof.a, "b": prof.b, "T": prof.T}
    out = {
        "dist": p.model.descriptor(), "k": p.k, "lambda": p.lam, "d": p.d,
        "hat_lambda": p.model.hat_lambda,
        "theta_star": solve_theta_star(p.model, p.lam),
        "theta_l": {l: solve_theta_l(p.model, p.lam, l) for l in range(1, p.k)},
        "J": rep.J, "l_opt": rep.l_opt, "infeasible": list(rep.infeasible),
        "profiles": profiles,
    }
    if args.format == "csv":
        rows = [[l, profiles[l]["J"], profiles[l]["theta"], profiles[l]["a"], profiles[l]["b"], profiles[l]["T"]]
                for l in sorted(profiles)]
        return 0, _csv(["l", "J", "theta", "a", "b", "T"], rows)
    return 0, emit_json(out)


def cmd_critical(args) -> tuple[int, str]:
    model = MessageLengthModel.parse(args.dist)
    if args.k is None:
        raise ValueError("--k is required")
    tab = cr.critical_table(model, int(args.k))
    out = {
        "dist": model.descriptor(), "k": tab.k, "hat_lambda": tab.hat_lambda,
        "lambda_star": tab.lambda_star, "lambda_l1": tab.lambda_l1,
        "lambda_lower": tab.lambda_lower, "lambda_upper": tab.lambda_upper,
    }
    if args.format == "csv":
        rows = [["lambda_star", tab.k, l, v] for l, v in tab.lambda_star.items()]
        rows += [["lambda_l1", l, 1, v] for l, v in tab.lambda_l1.items()]
        rows += [["lambda_lower", tab.k, "", tab.lambda_lower], ["lambda_upper", tab.k, "", tab.lambda_upper],
                 ["hat_lambda", "", "", tab.hat_lambda]]
        return 0, _csv(["quantity", "i", "j", "value"], rows)
    return 0, emit_json(out)


def cmd_phase(args) -> tuple[int, str]:
    model = MessageLengthModel.parse(args.dist)
    if args.k is None:
        raise ValueError("--k is required")
    if args.grid is None and args.lam is None:
        raise ValueError("--grid or --lambda is required")
    grid = parse_grid(args.grid) if args.grid is not None else np.array([float(args.lam)])
    diag = cr.phase_sweep(model, int(args.k), float(args.d), grid)
    k = diag.k
    if args.format == "json":
        out = {"dist": model.descriptor(), "k": k, "d": diag.d, "lambda": diag.lambdas,
               "l_opt": diag.l_opt, "J": diag.J}
        return 0, emit_json(out)
    rows = []
    for i, lam in enumerate(diag.lambdas):
        rows.append([float(lam), int(diag.l_opt[i])] +
                    [None if math.isnan(v) else float(v) for v in diag.J[i]])
    return 0, _csv(["lambda", "l_opt"] + [f"J_{l}" for l in range(1, k + 1)], rows)


def cmd_route(args) -> tuple[int, str]:
    if args.slopes is None:
        raise ValueError("--slopes is required")
    a = parse_slopes(args.slopes)
    k = a.size
    out = {"slopes": a}
    if args.subset is not None:
        flows = parse_subset(args.subset, k)
        if len(flows) >= k:
            raise ValueError("subset must leave at least one flow out; omit --subset for the full ring")
        load, split = solve_O2(a[flows])
        out.update({
            "problem": "O2", "flows": [f + 1 for f in flows],
            "servers": [(flows[0] - 1) % k + 1] + [f + 1 for f in flows],
            "D": load.D, "b": load.b, "alpha": split.alpha,
            "balanced": is_balanced(a[flows]),
        })
    else:
        load, split = solve_O1(a)
        out.update({"problem": "O1", "D": load.D, "b": load.b, "alpha": split.alpha,
                    "balanced": load.D <= 1e-9 * max(1.0, float(a.sum()))})
    out["maximal_balanced_sets"] = [[f + 1 for f in s] for s in maximal_balanced_sets(a)]
    return 0, emit_json(out)


def _tilt(args, p: NetworkParams):
    if args.tilt is None:
        return None
    if str(args.tilt) == "auto":
        return scenario(p).l_opt
    return int(args.tilt)


def cmd_simulate(args) -> tuple[int, str]:
    p = _params(args)
    config = SimConfig(
        p, n=float(args.n), trials=int(args.trials), seed=int(args.seed),
        warmup=None if args.warmup is None else float(args.warmup),
        tilt_l=_tilt(args, p),
        tilt_theta=None if args.tilt_theta is None else float(args.tilt_theta),
    )
    if args.census:
        res = overheat_census(config, window=args.window, a_min=float(args.a_min), eps=float(args.eps))
    else:
        res = estimate_overload(config)
    out = res.summary()
    out["config"] = {"dist": p.model.descriptor(), "k": p.k, "lambda": p.lam, "d": p.d,
                     "n": config.n, "trials": config.trials, "seed": config.seed,
                     "warmup": config.warmup_time(), "tilt_l": config.tilt_l}
    rep = scenario(p) if p.stable else None
    if rep is not None:
        out["prediction"] = {"l_opt": rep.l_opt, "J": rep.J[rep.l_opt],
                             "rate_over_d": rep.J[rep.l_opt] / p.d,
                             "J_1": rep.J.get(1)}
    if args.event_log:
        with open(args.event_log, "w", newline="") as fh:
            events_to_csv(event_log(config, 0), fh)
    return 0, emit_json(out)


@dataclass
class Row:
    example: int
    label: str
    computed: float
    reference: float

    def passed(self, tol: float) -> bool:
        return abs(self.computed - self.reference) <= tol


def reproduce_rows(examples=(1, 2, 3)) -> list[Row]:
    rows: list[Row] = []
    if 1 in examples:
        e = MessageLengthModel.exponential(1.0)
        for k in (3, 4, 5, 10):
            expect = (k - 2) / (k - 1)
            rows.append(Row(1, f"exp c=1 lambda_{k}", cr.lambda_lower(e, k), expect))
            rows.append(Row(1, f"exp c=1 lambda^{k}", cr.lambda_upper(e, k), expect))
        rows.append(Row(1, "exp c=1 lambda_{3,2} (all curves meet at c)", cr.lambda_l2l1(e, 3, 2)[0], 1.0))
    if 2 in examples:
        m = MessageLengthModel.mixture(1.0, 0.5)
        rows.append(Row(2, "mix c=1 g=0.5 hat_lambda", m.hat_lambda, 0.75))
        rows.append(Row(2, "mix c=1 g=0.5 lambda*_{3,1}", cr.lambda_star_kl(m, 3, 1)[0], 0.418))
    if 3 in examples:
        det = MessageLengthModel.deterministic(1.0)
        for k, v in ((3, 0.311), (5, 0.667), (10, 0.857), (12, 0.883)):
            rows.append(Row(3, f"det c=1 lambda_{k}", cr.lambda_lower(det, k), v))
        for k in range(3, 13):
            rows.append(Row(3, f"det c=1 lambda^{k} - lambda_{k}",
                            cr.lambda_upper(det, k) - cr.lambda_lower(det, k), 0.0))
        rows.append(Row(3, "det c=1 lambda_{2,1}", cr.lambda_l2l1(det, 2, 1)[0], 0.888))
        for k in range(13, 36):
            rows.append(Row(3, f"det c=1 lambda_{k}", cr.lambda_lower(det, k), 0.888))
        rows.append(Row(3, "det c=1 lambda_{3,2}", cr.lambda_l2l1(det, 3, 2)[0], 0.956))
        for k, v in ((15, 0.910), (20, 0.935), (25, 0.940), (30, 0.959), (35, 0.965)):
            rows.append(Row(3, f"det c=1 lambda^{k}", cr.lambda_upper(det, k), v))
    return rows


def cmd_reproduce(args) -> tuple[int, str]:
    tol = float(args.tol)
    examples = (int(args.example),) if args.example is not None else (1, 2, 3)
    rows = reproduce_rows(examples)
    ok = all(r.passed(tol) for r in rows)
    data = [[r.example, r.label, r.computed, r.reference, abs(r.computed - r.reference), "pass" if r.passed(tol) else "FAIL"]
            for r in rows]
    header = ["example", "quantity", "computed", "reference", "abs_diff", "status"]
    if args.format == "json":
        text = emit_json({"tol": tol, "all_pass": ok, "rows": [dict(zip(header, d)) for d in data]})
    elif args.format == "csv":
        text = _csv(header, data)
    else:
        n_fail = sum(1 for r in rows if not r.passed(tol))
        text = _table(header, data) + f"\n{len(rows) - n_fail}/{len(rows)} rows pass at tol={tol:g}\n"
    return (0 if ok else 1), text


COMMANDS = {
    "analyze": cmd_analyze,
    "critical": cmd_critical,
    "phase": cmd_phase,
    "route": cmd_route,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringdev", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file with option values (flags override)")
    parser.add_argument("--dist", help="length law: exp:c=..., mix:c=...,g=..., det:c=...")
    parser.add_argument("--k", type=int)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--d", type=float)
    parser.add_argument("--l", type=int)
    parser.add_argument("--grid", help="lambda grid start:stop:step or comma list")
    parser.add_argument("--slopes", help="comma-separated flow slopes")
    parser.add_argument("--subset", help="1-based cyclic flow range i..j (route)")
    parser.add_argument("--n", type=float, help="scaling level")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--warmup", type=float)
    parser.add_argument("--tilt", help="importance-sampling scenario l, or 'auto'")
    parser.add_argument("--tilt-theta", dest="tilt_theta", type=float)
    parser.add_argument("--census", action="store_true", default=None)
    parser.add_argument("--window", type=float)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--a-min", dest="a_min", type=float)
    parser.add_argument("--event-log", dest="event_log")
    parser.add_argument("--example", type=int, choices=(1, 2, 3))
    parser.add_argument("--tol", type=float)
    parser.add_argument("--format", choices=("json", "csv", "table"))
    parser.add_argument("--out", help="write the report here instead of stdout")
    return parser


_CONFIG_ALIASES = {"lambda": "lam", "tilt-theta": "tilt_theta", "a-min": "a_min", "event-log": "event_log"}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from ``--config`` and then from :data:`DEFAULTS`."""
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        for key, value in doc.items():
            name = _CONFIG_ALIASES.get(key, key.replace("-", "_"))
            if name == "command":
                continue
            if not hasattr(args, name):
                raise ValueError(f"unknown config key {key!r}")
            if getattr(args, name) is None:
                setattr(args, name, value)
    for name, value in DEFAULTS.items():
        if getattr(args, name) is None:
            setattr(args, name, value)
    if args.dist is None and args.command != "route" and args.command != "reproduce":
        raise ValueError("--dist is required")
    for name in ("grid", "slopes", "tilt"):
        v = getattr(args, name)
        if isinstance(v, list):
            setattr(args, name, ",".join(str(x) for x in v))
    args.census = bool(args.census)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve(args)
        code, text = COMMANDS[args.command](args)
    except (RingDevError, ValueError, OSError) as exc:
        print(f"ringdev {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
