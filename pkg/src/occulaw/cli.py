"""Command-line front end.

States are labelled ``1..m`` in all CLI input and output. Every CSV starts
with one ``#`` metadata line (version, seed, config hash) followed by a
header row; the data section depends only on the resolved configuration.
Failures exit non-zero and print ``{"error": ..., "message": ...}`` on
stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ChainConfig,
    all_multi_indices,
    burn_in_threshold,
    check_distribution,
    generator_from_json,
    load_generator,
    transition_kernel,
    uniform,
)
from .errors import SpecError
from .experiments import ball_fraction, run_figure2, run_regime_report
from .moments import dirichlet_moment, limit_moment, resolvent_stack, theta_generator
from .oracle import exact_moment, exact_occupation_law
from .simulate import ensemble_occupations, occupation_vector, simulate_path, switch_count
from .spectral import contraction_coefficient, kernel_product_auto, stationary_distribution

COMMANDS = (
    "validate",
    "stationary",
    "kernel",
    "simulate",
    "ensemble",
    "moments",
    "dirichlet-check",
    "exact",
    "figure2",
    "regime-report",
)

# experiment-file keys accepted per command (besides "command")
SPEC_FIELDS = {
    "validate": {"generator", "zeta"},
    "stationary": {"generator"},
    "kernel": {"generator", "zeta", "n", "to"},
    "simulate": {"generator", "zeta", "pi", "n", "seed"},
    "ensemble": {"generator", "zeta", "pi", "n", "replicas", "seed"},
    "moments": {"generator", "gamma", "degree"},
    "dirichlet-check": {"theta", "gamma", "degree"},
    "exact": {"generator", "zeta", "pi", "n", "gamma", "method"},
    "figure2": {"generator", "zeta", "pi", "n", "replicas", "seed", "bins", "all_bins", "plot"},
    "regime-report": {"generator", "zetas", "pi", "n", "replicas", "seed", "degree", "plot"},
}
COMMON_FIELDS = {"out", "format"}

DEFAULTS = {
    "zeta": 1.0,
    "seed": 0,
    "format": "csv",
    "bins": 10,
    "degree": 2,
    "method": "recursion",
}


# ----------------------------------------------------------------------------
# parsing helpers


def parse_pi(text, m: int) -> np.ndarray:
    if text is None or (isinstance(text, str) and text.strip().lower() == "uniform"):
        return uniform(m)
    if isinstance(text, str):
        values = [float(v) for v in text.split(",") if v.strip()]
    else:
        values = [float(v) for v in text]
    return np.array(check_distribution(values, m))


def parse_gamma_list(text) -> list[tuple[int, ...]]:
    """``"1,0,0;2,1,0"`` -> ``[(1, 0, 0), (2, 1, 0)]``; lists pass through."""
    if isinstance(text, str):
        groups = [g for g in text.split(";") if g.strip()]
        return [tuple(int(v) for v in g.split(",")) for g in groups]
    return [tuple(int(v) for v in g) for g in text]


def parse_floats(text) -> list[float]:
    if isinstance(text, str):
        return [float(v) for v in text.split(",") if v.strip()]
    return [float(v) for v in text]


def _resolve_generator(value):
    if value is None:
        raise SpecError("a generator is required (--generator FILE)")
    if isinstance(value, dict):
        return generator_from_json(value)
    return load_generator(value)


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(header, rows, meta: dict) -> str:
    buf = io.StringIO()
    meta_text = " ".join(f"{k}={v}" for k, v in meta.items())
    buf.write(f"# occulaw {__version__} {meta_text}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sibling(out, suffix: str, default: str) -> Path:
    return Path(out).with_suffix(suffix) if out else Path(default)


# ----------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occulaw",
        description="Occupation laws of Markov chains with kernels I + G/n^zeta.",
    )
    parser.add_argument("--version", action="version", version=f"occulaw {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="JSON experiment file; explicit flags override it")
    common.add_argument("--generator", help='generator JSON file {"m": int, "entries": [[...]]}')
    common.add_argument("--zeta", type=float, help="strength parameter (default 1)")
    common.add_argument("--pi", help='initial distribution: comma list or "uniform" (default)')
    common.add_argument("--n", type=int, help="horizon / kernel index")
    common.add_argument("--replicas", type=int, help="ensemble size")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--gamma", help='multi-indices, e.g. "2,0,1;1,1,1"')
    common.add_argument("--bins", type=int, help="histogram grid size (default 10)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check a generator and print its burn-in threshold",
        "stationary": "stationary distribution of a generator",
        "kernel": "one-step kernel P_n, or the product P_n..P_to",
        "simulate": "one sampled path",
        "ensemble": "occupation vectors of independent replicas",
        "moments": "limit-law moments for zeta = 1",
        "dirichlet-check": "compare limit moments of Theta(theta) with Dirichlet moments",
        "exact": "exact law (or exact moments) of the occupation counts",
        "figure2": "binned plane histogram of three-state occupation vectors",
        "regime-report": "ensemble summaries for several zeta values",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=helps[name]) for name in COMMANDS}
    subs["kernel"].add_argument("--to", type=int, help="last index of the kernel product")
    for name in ("moments", "dirichlet-check", "regime-report"):
        subs[name].add_argument("--degree", type=int, help="all multi-indices up to this total degree")
    subs["dirichlet-check"].add_argument("--theta", help="comma list of positive parameters")
    subs["exact"].add_argument("--method", choices=("recursion", "law"), help="exact-moment route")
    subs["figure2"].add_argument("--all-bins", dest="all_bins", action="store_true", default=None,
                                 help="also emit empty bins that meet the triangle")
    subs["regime-report"].add_argument("--zetas", help="comma list of zeta values (default 0.3,1,1.5)")
    for name in ("figure2", "regime-report"):
        subs[name].add_argument("--no-plot", dest="plot", action="store_false", default=None,
                                help="skip the PNG figure")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge the experiment file, explicit flags and defaults; reject unknown keys."""
    command = args.command
    allowed = SPEC_FIELDS[command] | COMMON_FIELDS
    params: dict = {}
    if args.spec:
        spec = json.loads(Path(args.spec).read_text())
        if not isinstance(spec, dict):
            raise SpecError("experiment file must hold a JSON object")
        if "command" in spec and spec["command"] != command:
            raise SpecError(f'experiment file is for "{spec["command"]}", not "{command}"')
        unknown = set(spec) - allowed - {"command"}
        if unknown:
            raise SpecError(f"unknown fields for {command}: {sorted(unknown)}")
        params.update({k: v for k, v in spec.items() if k != "command"})
    for key, value in vars(args).items():
        if key in ("command", "spec") or value is None:
            continue
        if key not in allowed:
            raise SpecError(f"--{key.replace('_', '-')} is not used by {command}")
        params[key] = value
    for key, value in DEFAULTS.items():
        if key in allowed:
            params.setdefault(key, value)
    return params


# ----------------------------------------------------------------------------
# commands


def _meta(params: dict, payload: dict) -> dict:
    return {"seed": params.get("seed", "-"), "config_hash": config_hash(payload)}


def cmd_validate(p):
    G = _resolve_generator(p.get("generator"))
    out = {"valid": True, "m": G.m, "entries": G.entries.tolist(), "stationary": stationary_distribution(G).tolist()}
    if "zeta" in p:
        out["zeta"] = p["zeta"]
        out["burn_in"] = burn_in_threshold(G, p["zeta"])
    return render_json(out)


def cmd_stationary(p):
    G = _resolve_generator(p.get("generator"))
    nu = stationary_distribution(G)
    if p["format"] == "json":
        return render_json({"stationary": nu.tolist()})
    payload = {"command": "stationary", "G": G.entries}
    return render_csv(["state", "nu"], ([i + 1, float(v)] for i, v in enumerate(nu)), _meta(p, payload))


def cmd_kernel(p):
    G = _resolve_generator(p.get("generator"))
    zeta, n = p["zeta"], p.get("n")
    if n is None:
        raise SpecError("kernel needs --n")
    to = p.get("to")
    P = transition_kernel(G, zeta, n) if to is None else kernel_product_auto(G, zeta, n, to)
    if p["format"] == "json":
        return render_json({"from": n, "to": to or n, "matrix": P.tolist(), "contraction": contraction_coefficient(P)})
    payload = {"command": "kernel", "G": G.entries, "zeta": zeta, "n": n, "to": to}
    header = ["row"] + [f"col_{j + 1}" for j in range(G.m)]
    return render_csv(header, ([i + 1, *map(float, P[i])] for i in range(G.m)), _meta(p, payload))


def _config(p) -> ChainConfig:
    G = _resolve_generator(p.get("generator"))
    if p.get("n") is None:
        raise SpecError("--n (horizon) is required")
    return ChainConfig(G, p["zeta"], parse_pi(p.get("pi"), G.m), p["n"], p.get("seed", 0))


def _config_payload(command, c: ChainConfig, **extra):
    return {"command": command, "G": c.generator.entries, "zeta": c.zeta, "pi": c.initial,
            "n": c.horizon, "seed": c.seed, **extra}


def cmd_simulate(p):
    c = _config(p)
    t = simulate_path(c)
    z = occupation_vector(t)
    if p["format"] == "json":
        return render_json({"states": (t.states + 1).tolist(), "occupation": z.tolist(),
                            "switch_count": switch_count(t)})
    return render_csv(["k", "state"], ([k, int(s) + 1] for k, s in enumerate(t.states)),
                      _meta(p, _config_payload("simulate", c)))


def cmd_ensemble(p):
    c = _config(p)
    R = p.get("replicas") or 1
    ens = ensemble_occupations(c, R)
    if p["format"] == "json":
        return render_json({"replicas": ens.replicas.tolist(), "switch_counts": ens.switch_counts.tolist(),
                            "final_states": (ens.final_states + 1).tolist(), "mean": ens.mean().tolist(),
                            "std": ens.std().tolist()})
    header = ["replica_index", *[f"Z_{i + 1}" for i in range(c.m)], "switch_count", "final_state"]
    return render_csv(header, ens.to_csv_rows(), _meta(p, _config_payload("ensemble", c, R=R)))


def _gammas(p, m):
    if p.get("gamma"):
        return parse_gamma_list(p["gamma"])
    return [mi.gamma for mi in all_multi_indices(m, int(p["degree"]))]


def cmd_moments(p):
    G = _resolve_generator(p.get("generator"))
    gammas = _gammas(p, G.m)
    dmax = max(sum(g) for g in gammas)
    res = resolvent_stack(G, max(dmax - 1, 0))
    values = [limit_moment(G, g, _resolvents=res) for g in gammas]
    if p["format"] == "json":
        return render_json({"moments": [{"gamma": list(v.gamma.gamma), "value": v.value, "method": v.method.value}
                                        for v in values]})
    rows = ([";".join(map(str, v.gamma.gamma)), v.value, v.method.value] for v in values)
    return render_csv(["gamma", "value", "method"], rows, _meta(p, {"command": "moments", "G": G.entries,
                                                                    "gammas": gammas}))


def cmd_dirichlet_check(p):
    if "theta" not in p:
        raise SpecError("dirichlet-check needs --theta")
    theta = parse_floats(p["theta"])
    G = theta_generator(theta)
    gammas = _gammas(p, G.m)
    res = resolvent_stack(G, max(max(sum(g) for g in gammas) - 1, 0))
    rows = []
    for g in gammas:
        a = limit_moment(G, g, _resolvents=res).value
        b = dirichlet_moment(theta, g)
        rows.append([";".join(map(str, g)), a, b, abs(a - b)])
    worst = max(r[3] for r in rows)
    if p["format"] == "json":
        return render_json({"theta": theta, "max_abs_diff": worst, "agree_1e-9": worst <= 1e-9,
                            "rows": [dict(zip(("gamma", "limit_moment", "dirichlet_moment", "abs_diff"), r))
                                     for r in rows]})
    return render_csv(["gamma", "limit_moment", "dirichlet_moment", "abs_diff"], rows,
                      _meta(p, {"command": "dirichlet-check", "theta": theta, "gammas": gammas}))


def cmd_exact(p):
    c = _config(p)
    payload = _config_payload("exact", c, gamma=p.get("gamma"), method=p["method"])
    if p.get("gamma"):
        gammas = parse_gamma_list(p["gamma"])
        vals = [exact_moment(c.generator, c.zeta, c.initial, c.horizon, g, method=p["method"]) for g in gammas]
        if p["format"] == "json":
            return render_json({"moments": [{"gamma": list(g), "value": v} for g, v in zip(gammas, vals)]})
        rows = ([";".join(map(str, g)), v] for g, v in zip(gammas, vals))
        return render_csv(["gamma", "value"], rows, _meta(p, payload))
    law = exact_occupation_law(c.generator, c.zeta, c.initial, c.horizon)
    if p["format"] == "json":
        return render_json({"horizon": law.horizon, "counts": law.counts.tolist(), "probs": law.probs.tolist()})
    header = [*[f"count_{i + 1}" for i in range(c.m)], "probability"]
    return render_csv(header, law.to_csv_rows(), _meta(p, payload))


def cmd_figure2(p):
    G = _resolve_generator(p.get("generator"))
    n = p.get("n") or 10_000
    R = p.get("replicas") or 1000
    pi = parse_pi(p.get("pi"), G.m)
    res = run_figure2(G, n=n, replicas=R, seed=p["seed"], bins=p["bins"], zeta=p["zeta"], pi=pi)
    payload = {"command": "figure2", "G": G.entries, "zeta": p["zeta"], "pi": pi, "n": n, "R": R,
               "seed": p["seed"], "bins": p["bins"]}
    meta = _meta(p, payload)
    if res.histogram is None:
        header = ["replica_index", *[f"Z_{i + 1}" for i in range(G.m)], "switch_count", "final_state"]
        return render_csv(header, res.ensemble.to_csv_rows(), meta)
    hist = res.histogram
    if p.get("plot", True):
        from .plotting import plot_triangle_histogram

        png = _sibling(p.get("out"), ".png", "figure2.png")
        plot_triangle_histogram(hist, png, title=f"R={R}, n={n}, zeta={p['zeta']:g}")
    if p["format"] == "json":
        return render_json({
            "bins": hist.bins,
            "interior_occupancy": hist.interior_occupancy(),
            "centroid_ball_fraction": ball_fraction(res.points, res.points.mean(axis=0), 0.2),
            "histogram": [dict(zip(("bin_x", "bin_y", "count"), r)) for r in hist.rows(bool(p.get("all_bins")))],
        })
    return render_csv(["bin_x", "bin_y", "count"], hist.rows(bool(p.get("all_bins"))), meta)


def cmd_regime_report(p):
    G = _resolve_generator(p.get("generator"))
    zetas = parse_floats(p.get("zetas", "0.3,1,1.5"))
    n = p.get("n") or 10_000
    R = p.get("replicas") or 200
    pi = parse_pi(p.get("pi"), G.m)
    report, blocks = run_regime_report(G, zetas, n=n, replicas=R, seed=p["seed"], pi=pi,
                                       moment_degree=int(p["degree"]))
    report["config_hash"] = config_hash({"command": "regime-report", "G": G.entries, "zetas": zetas, "pi": pi,
                                         "n": n, "R": R, "seed": p["seed"], "degree": p["degree"]})
    report["version"] = __version__
    if p.get("plot", True):
        from .plotting import plot_regime_report

        plot_regime_report(blocks, _sibling(p.get("out"), ".png", "regime-report.png"))
    return render_json(report)


HANDLERS = {
    "validate": cmd_validate,
    "stationary": cmd_stationary,
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "moments": cmd_moments,
    "dirichlet-check": cmd_dirichlet_check,
    "exact": cmd_exact,
    "figure2": cmd_figure2,
    "regime-report": cmd_regime_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = resolve(args)
        text = HANDLERS[args.command](params)
        _emit(text, params.get("out"))
    except (ValueError, OSError, KeyError, TypeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
