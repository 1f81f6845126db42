"""Command-line front end: reproduces the outage, antenna, tuning and correlation experiments.

Subcommands::

    mrcmix outage-sweep   # P_out vs threshold (analytic q-policies + PPP Monte Carlo)
    mrcmix antenna-sweep  # P_out vs number of antennas
    mrcmix tune-q         # tuned mixture weight over a grid of N and intensities
    mrcmix correlations   # interference / inverse / SIR correlation estimates
    mrcmix simulate       # one Monte Carlo outage estimate

Options may also come from a ``--config`` file of ``key = value`` lines;
command-line flags take precedence over the file, which takes precedence
over the built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import secrets
import sys
import time
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .analytic import IntegrationPolicy, outage_mixture, tune_q
from .errors import (
    DegenerateInputError,
    DomainError,
    InsufficientDataError,
    IntegrationError,
    MRCError,
    NoBracketError,
)
from .params import MixtureConfig, SystemParams
from .stochastic import SimConfig, draw_network, estimate_correlations, outage_grid

log = logging.getLogger("mrcmix")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_DATA = 4

DEFAULTS = {
    "alpha": 4.0,
    "d": 10.0,
    "lam": 1e-4,
    "p": 1.0,
    "intensity": None,
    "epsilon": 0.0,
    "threshold_db": 1.0,
    "antennas": 4,
    "q": None,
    "q_squared": None,
    "q_policy": "tuned",
    "extra_q2": "0.76,0.9",
    "trials": 10**6,
    "seed": None,
    "workers": 1,
    "window": "auto",
    "out": None,
    "format": "csv",
    "t_start": -10.0,
    "t_stop": 10.0,
    "t_step": 2.0,
    "t_list": None,
    "n_list": None,
    "intensity_list": None,
    "model": "ppp",
    "draw_antennas": None,
    "integration": "auto",
    "samples": 10**6,
    "no_mc": False,
}

# Columns every outage-sweep table starts with.
SWEEP_COLUMNS = [
    "T_dB",
    "T_linear",
    "N",
    "alpha",
    "intensity",
    "d",
    "q_tuned",
    "q2_tuned",
    "f_residual",
    "pout_analytic_tuned",
    "pout_analytic_q2_0p5",
    "pout_mc",
    "pout_mc_stderr",
    "trials",
    "seed",
]


class UsageError(MRCError):
    pass


def package_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def db_to_linear(t_db):
    return 10.0 ** (t_db / 10.0)


def q2_label(q2):
    return "pout_analytic_q2_" + f"{q2:g}".replace(".", "p").replace("-", "m")


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    default = DEFAULTS[key]
    if isinstance(default, bool):
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if key in ("trials", "samples", "workers", "antennas", "draw_antennas"):
        return int(float(value))
    if key == "seed":
        return int(value)
    if isinstance(default, float) or key in ("intensity", "q", "q_squared"):
        return float(value)
    return str(value)


def resolve_options(args):
    """Merge flags > config file > defaults into a plain dict."""
    opts = dict(DEFAULTS)
    if args.config:
        for k, v in read_config(args.config).items():
            opts[k] = _coerce(k, v)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            opts[k] = _coerce(k, v)
    return opts


def _floats(text):
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def build_params(opts):
    try:
        if opts["intensity"] is not None:
            return SystemParams.from_intensity(opts["intensity"], opts["alpha"], opts["d"], opts["epsilon"])
        return SystemParams(lam=opts["lam"], p=opts["p"], alpha=opts["alpha"], d=opts["d"], epsilon=opts["epsilon"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def build_sim(opts):
    seed = opts["seed"]
    if seed is None:
        seed = secrets.randbits(63)
        opts["seed"] = seed
        log.info("no --seed given, using generated seed %d", seed)
    window = None if str(opts["window"]).lower() == "auto" else float(opts["window"])
    try:
        return SimConfig(trials=opts["trials"], seed=seed, window=window, workers=opts["workers"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def build_policy(opts):
    seed = opts["seed"] if opts["seed"] is not None else 0
    return IntegrationPolicy(method=opts["integration"], samples=opts["samples"], seed=seed)


def fixed_q(opts):
    if opts["q"] is not None and opts["q_squared"] is not None:
        raise UsageError("give either --q or --q-squared, not both")
    if opts["q"] is not None:
        q = opts["q"]
    elif opts["q_squared"] is not None:
        if opts["q_squared"] < 0:
            raise UsageError("--q-squared must be nonnegative")
        q = math.sqrt(opts["q_squared"])
    else:
        return None
    if not 0.0 <= q <= 1.0:
        raise UsageError(f"q must lie in [0, 1], got {q}")
    return q


def policy_q(opts, params, N, T):
    """The q selected by ``--q-policy`` (``None`` when it cannot be identified)."""
    policy = opts["q_policy"]
    if policy == "tuned":
        try:
            return tune_q(params, N, T)
        except DegenerateInputError:
            return None
    if policy == "corr-match":
        return math.sqrt(0.5)
    q = fixed_q(opts)
    if q is None:
        raise UsageError("--q-policy fixed needs --q or --q-squared")
    return q


def threshold_grid(opts):
    if opts["t_list"]:
        grid = _floats(opts["t_list"])
    else:
        start, stop, step = opts["t_start"], opts["t_stop"], opts["t_step"]
        if step <= 0:
            raise UsageError("--t-step must be positive")
        grid = [float(t) for t in np.round(np.arange(start, stop + 0.5 * step, step), 10)]
    if not grid:
        raise UsageError("empty threshold grid")
    return sorted(set(grid))


def analytic_row(params, N, T, extra_q2, policy):
    """Analytic columns for one (N, T) point."""
    row = {}
    try:
        res = tune_q(params, N, T, full=True)
        row.update(q_tuned=res.q, q2_tuned=res.q2, f_residual=res.residual)
        q_for_tuned = res.q
    except DegenerateInputError:
        # One antenna: outage does not depend on q.
        row.update(q_tuned=float("nan"), q2_tuned=float("nan"), f_residual=0.0)
        q_for_tuned = 1.0
    row["pout_analytic_tuned"] = outage_mixture(params, MixtureConfig(N, q_for_tuned), T, policy)
    row["pout_analytic_q2_0p5"] = outage_mixture(params, MixtureConfig(N, math.sqrt(0.5)), T, policy)
    for q2 in extra_q2:
        row[q2_label(q2)] = outage_mixture(params, MixtureConfig(N, math.sqrt(q2)), T, policy)
    return row


def _base_row(params, N, T_db):
    return {
        "T_dB": T_db,
        "T_linear": db_to_linear(T_db),
        "N": N,
        "alpha": params.alpha,
        "intensity": params.lambda_p,
        "d": params.d,
    }


def _sweep(opts, points, draw_antennas):
    """Evaluate ``points`` = [(N, T_dB)]; one Monte Carlo draw serves every point."""
    params = build_params(opts)
    sim = build_sim(opts)
    policy = build_policy(opts)
    extra = [q2 for q2 in _floats(opts["extra_q2"] or "") if q2 != 0.5]
    mc = None
    if not opts["no_mc"]:
        t0 = time.perf_counter()
        draws = draw_network(params, draw_antennas, sim, "ppp")
        Ts = sorted({db_to_linear(t) for _, t in points})
        grid = outage_grid(draws, params, Ts, antennas=sorted({n for n, _ in points}))
        mc = {(n, T): est for n, ests in grid.items() for T, est in zip(Ts, ests)}
        mc_time = time.perf_counter() - t0
    rows = []
    failed = 0
    for N, T_db in points:
        t0 = time.perf_counter()
        row = _base_row(params, N, T_db)
        T = row["T_linear"]
        try:
            row.update(analytic_row(params, N, T, extra, policy))
            row["status"] = "ok"
            row["error"] = ""
        except MRCError as exc:
            failed += 1
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        if mc is not None:
            est = mc[(N, T)]
            row.update(pout_mc=est.mean, pout_mc_stderr=est.stderr)
        else:
            row.update(pout_mc=float("nan"), pout_mc_stderr=float("nan"))
        row.update(
            trials=sim.trials,
            seed=sim.seed,
            window=opts["window"],
            mc_draw_antennas=draw_antennas,
            wall_time_s=time.perf_counter() - t0,
        )
        rows.append(row)
    if mc is not None:
        log.info("Monte Carlo: %d trials in %.1f s", sim.trials, mc_time)
    columns = SWEEP_COLUMNS[:11] + [q2_label(q) for q in extra] + SWEEP_COLUMNS[11:]
    columns += ["window", "mc_draw_antennas", "wall_time_s", "status", "error"]
    return rows, columns, failed


def cmd_outage_sweep(opts):
    N = opts["antennas"]
    if N < 1:
        raise UsageError("--antennas must be positive")
    points = [(N, t) for t in threshold_grid(opts)]
    return _sweep(opts, points, N)


def cmd_antenna_sweep(opts):
    ns = sorted({int(x) for x in _floats(opts["n_list"] or "1,2,3,4,5,6")})
    if not ns or ns[0] < 1:
        raise UsageError("--n-list must hold positive antenna counts")
    points = [(n, opts["threshold_db"]) for n in ns]
    return _sweep(opts, points, ns[-1])


def cmd_tune_q(opts):
    params = build_params(opts)
    ns = sorted({int(x) for x in _floats(opts["n_list"])}) if opts["n_list"] else [opts["antennas"]]
    intensities = _floats(opts["intensity_list"]) if opts["intensity_list"] else [params.lambda_p]
    T = db_to_linear(opts["threshold_db"])
    rows = []
    for lp in sorted(intensities):
        p = SystemParams.from_intensity(lp, params.alpha, params.d, params.epsilon)
        for n in ns:
            res = tune_q(p, n, T, full=True)
            rows.append(
                {
                    "T_dB": opts["threshold_db"],
                    "T_linear": T,
                    "N": n,
                    "alpha": p.alpha,
                    "intensity": lp,
                    "d": p.d,
                    "B": res.B,
                    "q_tuned": res.q,
                    "q2_tuned": res.q2,
                    "f_residual": res.residual,
                    "roots_found": res.roots_found,
                }
            )
    return rows, list(rows[0]), 0


def cmd_correlations(opts):
    params = build_params(opts)
    sim = build_sim(opts)
    q = None if opts["model"] == "ppp" else fixed_q(opts)
    if opts["model"] != "ppp" and q is None:
        raise UsageError("--model mixture needs --q or --q-squared")
    rep = estimate_correlations(params, sim, q=q)
    row = {"alpha": params.alpha, "intensity": params.lambda_p, "q": q if q is not None else ""}
    row.update(rep.as_dict())
    row.update(seed=sim.seed, window=opts["window"])
    return [row], list(row), 0


def cmd_simulate(opts):
    params = build_params(opts)
    if opts["threshold_db"] is None or not math.isfinite(opts["threshold_db"]):
        raise UsageError("threshold must be a finite dB value")
    T = db_to_linear(opts["threshold_db"])
    if not T > 0:
        raise UsageError("threshold must be positive on the linear scale")
    sim = build_sim(opts)
    N = opts["antennas"]
    K = opts["draw_antennas"] or N
    if N < 1 or K < N:
        raise UsageError("need 1 <= --antennas <= --draw-antennas")
    q = None
    if opts["model"] == "mixture":
        q = policy_q(opts, params, N, T)
        if q is None:
            q = 1.0
    draws = draw_network(params, K, sim, opts["model"])
    est = outage_grid(draws, params, [T], antennas=[N], q=q)[N][0]
    row = _base_row(params, N, opts["threshold_db"])
    row.update(
        model=opts["model"],
        q=q if q is not None else "",
        pout_mc=est.mean,
        pout_mc_stderr=est.stderr,
        trials=est.trials,
        seed=sim.seed,
        window=opts["window"],
        mc_draw_antennas=K,
    )
    return [row], list(row), 0


COMMANDS = {
    "outage-sweep": cmd_outage_sweep,
    "antenna-sweep": cmd_antenna_sweep,
    "tune-q": cmd_tune_q,
    "correlations": cmd_correlations,
    "simulate": cmd_simulate,
}


def _fmt(value):
    if isinstance(value, float):
        return repr(float(value))
    return value


def write_table(rows, columns, opts, command, stream):
    if opts["format"] == "jsonl":
        for row in rows:
            stream.write(json.dumps({k: row.get(k) for k in columns}) + "\n")
        return
    header = {k: v for k, v in opts.items() if k != "out"}
    stream.write(f"# mrcmix {package_version()} {command}\n")
    stream.write(f"# config: {json.dumps(header, sort_keys=True)}\n")
    writer = csv.DictWriter(stream, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k, "")) for k in columns})


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--alpha", type=float, help="path-loss exponent (> 2)")
    g.add_argument("--intensity", type=float, help="active interferer intensity lambda*p per m^2")
    g.add_argument("--lam", type=float, help="transmitter intensity per m^2")
    g.add_argument("--p", type=float, help="ALOHA transmit probability")
    g.add_argument("--d", type=float, help="serving link distance in m")
    g.add_argument("--epsilon", type=float, help="path-loss regulariser (simulation only)")
    g.add_argument("--threshold-db", type=float, help="SIR threshold in dB")
    g.add_argument("--antennas", type=int, help="number of receive antennas N")
    g.add_argument("--q", type=float, help="mixture weight q")
    g.add_argument("--q-squared", type=float, help="mixture correlation q^2")
    g.add_argument("--q-policy", choices=["tuned", "corr-match", "fixed"])
    g.add_argument("--extra-q2", help="comma-separated q^2 values for extra analytic columns")
    g.add_argument("--integration", choices=["auto", "quadrature", "sampling"])
    g.add_argument("--samples", type=int, help="sample count for sampling-mode integration")
    s = common.add_argument_group("simulation")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--window", help="'auto' or half-width L in m")
    s.add_argument("--model", choices=["ppp", "mixture"])
    s.add_argument("--draw-antennas", type=int, help="simulate this many antennas and report the first N")
    s.add_argument("--no-mc", action="store_true", help="skip the Monte Carlo columns")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="output file (default stdout)")
    o.add_argument("--format", choices=["csv", "jsonl"])
    o.add_argument("--config", help="file of 'key = value' defaults")
    o.add_argument("-v", "--verbose", action="store_true")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--t-start", type=float)
    grid.add_argument("--t-stop", type=float)
    grid.add_argument("--t-step", type=float)
    grid.add_argument("--t-list", help="comma-separated thresholds in dB")
    grid.add_argument("--n-list", help="comma-separated antenna counts")
    grid.add_argument("--intensity-list", help="comma-separated intensities (tune-q)")

    parser = argparse.ArgumentParser(prog="mrcmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common, grid])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        opts = resolve_options(args)
        rows, columns, failed = COMMANDS[args.command](opts)
        if opts["out"]:
            with open(opts["out"], "w", encoding="utf-8", newline="") as fh:
                write_table(rows, columns, opts, args.command, fh)
        else:
            write_table(rows, columns, opts, args.command, sys.stdout)
    except (IntegrationError, NoBracketError, DegenerateInputError, ArithmeticError) as exc:
        print(f"mrcmix: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InsufficientDataError as exc:
        print(f"mrcmix: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, DomainError, ValueError) as exc:
        print(f"mrcmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"mrcmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_NUMERICAL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
