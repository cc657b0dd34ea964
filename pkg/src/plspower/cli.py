"""Command-line front end.

    plspower gen-pilot --n-per-class 5 --mu 5 --out-dir out/
    plspower fit out/pilot.csv -A 4
    plspower test out/pilot.csv -A 2 -J 500
    plspower power out/pilot.csv -A 1 --n-per-class 10 -I 100 -J 200
    plspower samplesize out/pilot.csv --beta 0.2 --n-min 5 --n-max 40
    plspower curve out/pilot.csv -A 1 2 3 4 --n-per-class 5 10 15 20 --plot
    plspower simulate out/pilot.csv --n-per-class 10 -I 3

Every command writes ``report.json`` into ``--out-dir``.  Exit status is 0 on
success, 1 on invalid input and 2 on runtime failure.
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, kernels
from .dataio import PilotSpec, gen_pilot, load_csv, save_csv, write_table
from .errors import InvalidInput, PlsPowerError
from .kernels import STAT_KINDS
from .permtest import adjust_bonferroni, compute_statistic, permutation_test
from .plsc import fit_plsc
from .pls import explained_variance
from .power import (
    PowerConfig,
    estimate_power_all,
    estimate_sample_size,
    power_curve,
    prepare_pilot,
    worker_count,
)
from .preprocess import center, drop_columns, preprocess, zero_variance_columns
from .simulate import simulate_dataset

log = logging.getLogger("plspower")

DEFAULTS = {
    "components": [1],
    "stat": "r2",
    "alpha": 0.05,
    "beta": 0.2,
    "perms": 200,
    "sims": 100,
    "epsilon": 0.01,
    "seed": 0,
    "n_per_class": [5],
    "n_min": 5,
    "n_max": 50,
    "step": 1,
    "variance_threshold": 0.8,
    "autoscale": True,
    "label_col": "class",
    "out_dir": "plspower_out",
    "plot": False,
    "a_pilot": 2,
    "mu": 5.0,
    "p_signal": 5,
    "p_noise": 25,
}

COMMAND_DEFAULTS = {
    "curve": {"components": [1, 2, 3, 4], "n_per_class": [5, 10, 15, 20, 25, 30]},
    "simulate": {"sims": 1},
}

CURVE_COLUMNS = ["A", "n_per_class", "power", "stderr", "rejections"]


class UsageError(InvalidInput):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def body(self):
        """Report contents without the timing block."""
        d = asdict(self)
        d.pop("timing")
        return d


# ---------------------------------------------------------------- arguments


def _add_common(p, *, data=True):
    if data:
        p.add_argument("data", help="input CSV file")
        p.add_argument("--label-col", dest="label_col")
        p.add_argument("--autoscale", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float)


def _add_model(p, multi_a=False):
    p.add_argument("-A", "--components", type=int, nargs="+" if multi_a else 1)
    p.add_argument("--stat", choices=["mcc", "score", "r2"])


def _add_mc(p, multi_n=False):
    p.add_argument("--alpha", type=float)
    p.add_argument("-J", "--perms", type=int)
    p.add_argument("-I", "--sims", type=int)
    p.add_argument("--n-per-class", dest="n_per_class", type=int, nargs="+" if multi_n else 1)
    p.add_argument("--variance-threshold", dest="variance_threshold", type=float)


def build_parser():
    parser = _Parser(prog="plspower", description="Power analysis for two-class PLS studies")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-pilot", help="write a synthetic two-class pilot CSV")
    _add_common(p, data=False)
    p.add_argument("--n-per-class", dest="n_per_class", type=int, nargs=1)
    p.add_argument("--a-pilot", dest="a_pilot", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--p-signal", dest="p_signal", type=int)
    p.add_argument("--p-noise", dest="p_noise", type=int)
    p.add_argument("--label-col", dest="label_col")

    p = sub.add_parser("fit", help="fit PLSc and tabulate statistics for 1..A components")
    _add_common(p)
    _add_model(p)

    p = sub.add_parser("test", help="permutation p-values of the three statistics")
    _add_common(p)
    _add_model(p)
    p.add_argument("-J", "--perms", type=int)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("power", help="Monte Carlo power at one sample size")
    _add_common(p)
    _add_model(p)
    _add_mc(p)

    p = sub.add_parser("samplesize", help="smallest per-class size reaching 1 - beta")
    _add_common(p)
    _add_model(p)
    _add_mc(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--plot", action="store_true", default=None)

    p = sub.add_parser("curve", help="power over a grid of components and sample sizes")
    _add_common(p)
    _add_model(p, multi_a=True)
    _add_mc(p, multi_n=True)
    p.add_argument("--plot", action="store_true", default=None)

    p = sub.add_parser("simulate", help="write datasets simulated from the pilot")
    _add_common(p)
    _add_model(p)
    p.add_argument("-I", "--sims", type=int)
    p.add_argument("--n-per-class", dest="n_per_class", type=int, nargs=1)
    p.add_argument("--variance-threshold", dest="variance_threshold", type=float)
    return parser


def resolve_options(args):
    """Merge defaults < config file < explicit flags."""
    opts = dict(DEFAULTS)
    opts.update(COMMAND_DEFAULTS.get(args.command, {}))
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_opts, dict):
            raise InvalidInput("config file must hold a JSON object")
        for key, value in file_opts.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise InvalidInput(f"unknown config key {key!r}")
            if key in ("components", "n_per_class") and not isinstance(value, list):
                value = [value]
            opts[key] = value
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            opts[key] = value
    return opts


def _single(opts, key):
    values = opts[key]
    if len(values) != 1:
        raise InvalidInput(f"--{key.replace('_', '-')} takes a single value for this command")
    return int(values[0])


# ---------------------------------------------------------------- helpers


def _load_pilot(opts, notes):
    data = load_csv(opts["data"], opts["label_col"])
    if data.labels is None:
        raise InvalidInput("input has no labels")
    if opts["autoscale"]:
        bad = zero_variance_columns(data.X)
        if bad.size:
            names = [data.variable_names[i] for i in bad] if data.variable_names else list(bad)
            msg = f"dropped {bad.size} zero-variance column(s): {names}"
            log.warning(msg)
            notes.append(msg)
            data = drop_columns(data, bad)
        return preprocess(data, "autoscaled")
    return preprocess(data, "centered")


def _power_config(opts, A=None, n=None):
    return PowerConfig(
        A=A if A is not None else _single(opts, "components"),
        stat=opts["stat"],
        alpha=opts["alpha"],
        I=opts["sims"],
        J=opts["perms"],
        epsilon=opts["epsilon"],
        n1=n if n is not None else _single(opts, "n_per_class"),
        n2=n if n is not None else _single(opts, "n_per_class"),
        seed=opts["seed"],
        variance_threshold=opts["variance_threshold"],
    )


def _similarity_summary(records):
    ok = [r for r in records if r.failed is None]
    if not ok:
        return {}
    rv = [r.rv for r in ok]
    pr = [r.procrustes for r in ok]
    return {
        "rv_min": min(rv), "rv_mean": float(np.mean(rv)),
        "procrustes_min": min(pr), "procrustes_mean": float(np.mean(pr)),
        "gram_error_max": max(r.gram_error for r in ok),
        "cross_error_max": max(r.cross_error for r in ok),
        "signal_ratio_min": min(r.signal_ratio for r in ok),
    }


def _iterations(records):
    return [
        {"i": r.index, "p_raw": r.p_raw, "p_adjusted": r.p_adjusted, "reject": r.reject,
         "failed": r.failed}
        for r in records
    ]


def _curve_rows(entries):
    return [[A, n, est.power, est.mc_stderr, est.rejections] for A, n, est in entries]


def plot_curve(path, entries, stat, alpha):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "plspower"
    fig, ax = plt.subplots(figsize=(6, 4))
    for A in sorted({e[0] for e in entries}):
        rows = sorted((n, est) for a, n, est in entries if a == A)
        n = np.array([r[0] for r in rows])
        p = np.array([r[1].power for r in rows])
        se = np.array([r[1].mc_stderr for r in rows])
        (line,) = ax.plot(n, p, marker="o", label=f"A = {A}")
        ax.fill_between(n, np.clip(p - 1.96 * se, 0, 1), np.clip(p + 1.96 * se, 0, 1),
                        color=line.get_color(), alpha=0.2)
    ax.set_xlabel("observations per class")
    ax.set_ylabel("power")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{stat} statistic, alpha = {alpha}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------- commands


def cmd_gen_pilot(opts, report, out_dir):
    spec = PilotSpec(
        n_per_class=_single(opts, "n_per_class"),
        p_signal=opts["p_signal"], p_noise=opts["p_noise"],
        a_pilot=opts["a_pilot"], mu=opts["mu"], seed=opts["seed"],
    )
    data = gen_pilot(spec)
    path = os.path.join(out_dir, "pilot.csv")
    save_csv(path, data, opts["label_col"])
    report.results = {"pilot": asdict(spec), "shape": list(data.X.shape), "file": "pilot.csv"}


def cmd_fit(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    A_max = _single(opts, "components")
    model = fit_plsc(data.X, data.labels, A_max, opts["epsilon"])
    fractions, residual = explained_variance(model.pls)
    table = []
    for a in range(1, A_max + 1):
        row = {"A": a}
        for kind in STAT_KINDS:
            row[kind] = compute_statistic(data.X, data.labels, a, kind, opts["epsilon"]).value
        table.append(row)
    write_table(os.path.join(out_dir, "statistics.csv"), ["A", *STAT_KINDS],
                [[r["A"], *(float(r[k]) for k in STAT_KINDS)] for r in table])
    report.results = {
        "n_obs": data.n_obs, "n_vars": data.n_vars,
        "label_mapping": data.label_mapping,
        "explained_variance": fractions.tolist(),
        "residual_fraction": float(residual),
        "statistics": table,
    }


def cmd_test(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    A = _single(opts, "components")
    res = permutation_test(data.X, data.labels, A, opts["epsilon"], opts["perms"], opts["seed"])
    report.results = {
        "A": A, "J": opts["perms"], "primary_stat": opts["stat"],
        "label_mapping": data.label_mapping,
        "tests": {
            k: {"observed": r.observed.value, "p_value": r.p_value,
                "p_adjusted": adjust_bonferroni(r.p_value, A),
                "reject": adjust_bonferroni(r.p_value, A) <= opts["alpha"]}
            for k, r in res.items()
        },
    }


def cmd_power(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    cfg = _power_config(opts)
    est = estimate_power_all(data, cfg)
    any_est = est[cfg.stat]
    report.results = {
        "primary_stat": cfg.stat,
        "power": {k: e.to_dict() for k, e in est.items()},
        "iterations": _iterations(any_est.per_iteration),
    }
    report.diagnostics["similarity"] = _similarity_summary(any_est.per_iteration)
    report.diagnostics["warnings"].extend(any_est.warnings)


def cmd_samplesize(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    cfg = _power_config(opts, n=opts["n_min"])
    res = estimate_sample_size(data, cfg, opts["beta"], opts["n_min"], opts["n_max"], opts["step"])
    entries = [(cfg.A, n, est) for n, est in res.trace]
    write_table(os.path.join(out_dir, "power_curve.csv"), CURVE_COLUMNS, _curve_rows(entries))
    if opts["plot"]:
        plot_curve(os.path.join(out_dir, "power_curve.svg"), entries, cfg.stat, cfg.alpha)
    report.results = {
        "n_hat": res.n_hat, "reached": res.reached, "target_power": res.target,
        "n_max": res.n_max, "stat": cfg.stat, "A": cfg.A,
        "trace": [e.to_dict() for _, e in res.trace],
    }
    if not res.reached:
        report.diagnostics["warnings"].append(f"target power not reached by n = {res.n_max}")


def cmd_curve(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    cfg = _power_config(opts, A=opts["components"][0], n=opts["n_per_class"][0])
    rows = power_curve(data, cfg, opts["n_per_class"], opts["components"], kinds=STAT_KINDS)
    entries = [(A, n, est[cfg.stat]) for A, n, est in rows]
    write_table(os.path.join(out_dir, "power_curve.csv"), CURVE_COLUMNS, _curve_rows(entries))
    if opts["plot"]:
        plot_curve(os.path.join(out_dir, "power_curve.svg"), entries, cfg.stat, cfg.alpha)
    report.results = {
        "stat": cfg.stat,
        "rows": [{"A": A, "n_per_class": n, "power": {k: e.to_dict() for k, e in est.items()}}
                 for A, n, est in rows],
    }


def cmd_simulate(opts, report, out_dir):
    data = _load_pilot(opts, report.diagnostics["warnings"])
    n = _single(opts, "n_per_class")
    cfg = _power_config(opts, n=n)
    fit = prepare_pilot(data, cfg)
    rng = np.random.default_rng(opts["seed"])
    sims = []
    for i in range(1, opts["sims"] + 1):
        sim = simulate_dataset(fit.aug, n, n, rng, kdes=fit.kdes)
        ds = replace(data, X=sim.X_tilde, labels=sim.labels, label_mapping=None)
        name = f"simulated_{i}.csv"
        save_csv(os.path.join(out_dir, name), ds, opts["label_col"])
        sims.append({"file": name, **asdict(sim.diagnostics)})
    report.results = {
        "n_per_class": n, "A": cfg.A,
        "augmented_components": int(fit.aug.T_aug.shape[1]),
        "explained_variance": fit.aug.explained,
        "datasets": sims,
    }


COMMANDS = {
    "gen-pilot": cmd_gen_pilot,
    "fit": cmd_fit,
    "test": cmd_test,
    "power": cmd_power,
    "samplesize": cmd_samplesize,
    "curve": cmd_curve,
    "simulate": cmd_simulate,
}


def run(argv=None):
    """Parse `argv`, execute the command and return the RunReport."""
    args = build_parser().parse_args(argv)
    opts = resolve_options(args)
    if "data" in vars(args):
        opts["data"] = args.data
    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    echo = {k: v for k, v in sorted(opts.items()) if k not in ("out_dir",)}
    report = RunReport(args.command, echo, diagnostics={"warnings": []})
    start = time.perf_counter()
    COMMANDS[args.command](opts, report, out_dir)
    report.timing = {
        "seconds": time.perf_counter() - start,
        "workers": worker_count(),
        "backend": kernels.get_backend(),
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    return report


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(
        level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        report = run(argv)
    except (InvalidInput, FileNotFoundError) as exc:
        print(f"plspower: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, PlsPowerError) as exc:
        print(f"plspower: failed: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report.results.get("power") or report.results, indent=2)[:2000])
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
