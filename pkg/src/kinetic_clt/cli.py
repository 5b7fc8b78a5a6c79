"""Command line runner: ``kinetic-clt run | presets | selftest``.

An experiment is one ``[experiment]`` table in INI syntax, for example::

    [experiment]
    scenario = kac_gaussian_limit
    kernel = kac
    law = rademacher(1)
    times = 1, 2, 4, 8
    samples = 100000
    seed = 1

``run`` accepts a path to such a file or the name of a built-in preset.
Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 a scenario
check failed.
"""

import argparse
import configparser
import json
import math
import os
import subprocess
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateFit, KineticError, PoorDecay
from .initlaw import law_from_spec
from .kernel import kernel_from_spec
from .limit import BRANCH_CENTRED, BRANCH_GAUSS, BRANCH_MEAN, limit_mixture
from .metrics import (cf_sup_distance, empirical_cf_grid, fit_decay, noise_floor, theory_slope,
                      wasserstein_empirical)
from .montecarlo import run_ensemble
from .wild import CfGrid, DENSITY_CONVENTION, density_from_cf, wild_evaluate, wild_solve, wild_terms

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3
SEED_ENV = "KINETIC_CLT_SEED"
AUTO_POOL_LEAVES = 2e8


@dataclass
class ExperimentConfig:
    scenario: str
    kernel: str
    law: str
    times: list
    samples: int = 100_000
    seed: int = 1
    xi_max: float = 20.0
    grid_size: int = 1024
    wild_terms: int = None
    target_remainder: float = 1e-6
    gamma: list = field(default_factory=lambda: [2.0])
    n_proxy: int = 2000
    mix_samples: int = 20_000
    pool_size: int = None
    centered: bool = False
    wild: bool = True
    output: str = None
    description: str = ""


_FIELDS = {f for f in ExperimentConfig.__dataclass_fields__}


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def parse_config(text):
    """ExperimentConfig from INI text; raises ConfigError on any problem."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    if cp.sections() != ["experiment"]:
        raise ConfigError("config needs exactly one [experiment] section")
    raw = dict(cp["experiment"])
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("scenario", "kernel", "law", "times"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    try:
        cfg = ExperimentConfig(
            scenario=raw["scenario"].strip(),
            kernel=raw["kernel"].strip(),
            law=raw["law"].strip(),
            times=_floats(raw["times"]),
            samples=int(raw.get("samples", 100_000)),
            seed=int(raw.get("seed", 1)),
            xi_max=float(raw.get("xi_max", 20.0)),
            grid_size=int(raw.get("grid_size", 1024)),
            wild_terms=int(raw["wild_terms"]) if raw.get("wild_terms", "").strip() else None,
            target_remainder=float(raw.get("target_remainder", 1e-6)),
            gamma=_floats(raw.get("gamma", "2")),
            n_proxy=int(raw.get("n_proxy", 2000)),
            mix_samples=int(raw.get("mix_samples", 20_000)),
            pool_size=int(raw["pool_size"]) if raw.get("pool_size", "").strip() else None,
            centered=cp.getboolean("experiment", "centered", fallback=False),
            wild=cp.getboolean("experiment", "wild", fallback=True),
            output=raw.get("output") or None,
            description=raw.get("description", "").strip(),
        )
    except ValueError as exc:
        raise ConfigError(f"bad value in config: {exc}") from exc
    if not cfg.times or min(cfg.times) < 0:
        raise ConfigError("times must be a non-empty list of non-negative numbers")
    if cfg.samples < 1:
        raise ConfigError("samples must be >= 1")
    # validate the model names early so that errors map to exit code 2
    kernel_from_spec(cfg.kernel)
    law_from_spec(cfg.law)
    return cfg


# ------------------------------------------------------------ presets

PRESETS = {
    "kac_gaussian_limit": ("Gaussian limit of the Kac model (conservative kernel, alpha = 2)", """
[experiment]
scenario = kac_gaussian_limit
kernel = kac
law = rademacher(1)
times = 0.5, 1, 2, 4, 8
samples = 100000
seed = 1
xi_max = 20
grid_size = 1024
target_remainder = 1e-8
gamma = 2
"""),
    "inelastic_kac_stable_limit": ("1/2-stable limit of the inelastic Kac model p = 3 (alpha in (0,1))", """
[experiment]
scenario = inelastic_kac_stable_limit
kernel = inelastic_kac(3)
law = pareto2(0.5,1,1)
times = 0.5, 1, 2, 4, 8
samples = 100000
seed = 2
xi_max = 20
grid_size = 1024
target_remainder = 1e-8
gamma = 0.25
"""),
    "alpha1_infinite_mean_centering": ("centred V_t* for alpha = 1 and a 1-stable initial tail", """
[experiment]
scenario = alpha1_infinite_mean_centering
kernel = wealth(0.25,0.5)
law = pareto2(1,2,1)
times = 0.5, 1, 2, 4, 6
samples = 50000
seed = 3
centered = true
wild = false
gamma = 0.5
mix_samples = 20000
"""),
    "wealth_wasserstein_decay": ("W_2 decay towards m0 M_inf for the wealth kernel (alpha = 1, finite mean)", """
[experiment]
scenario = wealth_wasserstein_decay
kernel = wealth(0.25,0.5)
law = point(1)
times = 0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4
samples = 100000
seed = 4
xi_max = 40
grid_size = 4096
target_remainder = 1e-4
gamma = 2, 1.5
mix_samples = 100000
"""),
    "maxwell_energy_mixture": ("Gaussian scale mixture for inelastic Maxwell molecules (alpha = 2, S(6) = 0)", """
[experiment]
scenario = maxwell_energy_mixture
kernel = inelastic_maxwell
law = rademacher(1)
times = 0.5, 1, 2, 4, 6
samples = 100000
seed = 5
xi_max = 40
grid_size = 2048
target_remainder = 1e-6
gamma = 2
"""),
    "kac_density_convergence": ("L^1 / L^2 convergence of the Kac density from a Gaussian mixture", """
[experiment]
scenario = kac_density_convergence
kernel = kac
law = gmix([[0.5,-1,0.5],[0.5,1,0.5]])
times = 1, 2, 4, 8, 12
samples = 100000
seed = 6
xi_max = 20
grid_size = 1024
target_remainder = 1e-10
gamma = 2
"""),
}


def list_presets():
    width = max(map(len, PRESETS))
    return "\n".join(f"{name:<{width}}  {desc}" for name, (desc, _) in PRESETS.items())


def load_config(source):
    """Preset name or path to an INI file."""
    if source in PRESETS:
        return parse_config(PRESETS[source][1])
    try:
        with open(source) as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"no preset or file named {source!r}; presets: {', '.join(PRESETS)}") from exc
    return parse_config(text)


# ------------------------------------------------------------ output helpers

def version_string():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "unknown"


class _Writer:
    def __init__(self, outdir, cfg):
        self.outdir = outdir
        self.cfg = cfg
        self.version = version_string()
        self.files = []
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.outdir, name)

    def table(self, name, header, rows, seconds, extra=None):
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            fh.write(",".join(header) + "\r\n")
            for row in rows:
                fh.write(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row) + "\r\n")
        self.sidecar(name, seconds, extra)

    def sidecar(self, name, seconds, extra=None):
        meta = {"file": name, "config": asdict(self.cfg), "version": self.version,
                "wall_seconds": round(seconds, 3)}
        if extra:
            meta.update(extra)
        with open(self.path(name) + ".json", "w") as fh:
            json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        self.files.append(name)

    def json(self, name, obj, seconds):
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        self.sidecar(name, seconds)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _tag(t):
    return f"{t:g}"


def _gnuplot(cfg, have_density, have_fit):
    lines = [f"# {cfg.scenario}: generated plot script", "set datafile separator ','",
             "set terminal pngcairo size 900,600", f"set output '{cfg.scenario}.png'", "set key autotitle columnhead",
             "set multiplot layout 2,1",
             "set xlabel 'xi'; set ylabel 'Re phi'",
             "plot 'phi_t.csv' using 2:3 every ::1 with lines title 'phi(t)', "
             "'phi_inf.csv' using 1:2 with lines lw 2 title 'phi_inf'"]
    if have_density:
        lines += ["set xlabel 'v'; set ylabel 'f'", "plot 'density_t.csv' using 2:3 with lines title 'f(t)'"]
    elif have_fit:
        lines += ["set logscale y; set xlabel 't'; set ylabel 'W_gamma'",
                  "plot 'wasserstein.csv' using 1:3 with linespoints title 'W_gamma(V_t, V_inf)'"]
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ the pipeline

def _vinf_samples(mix, seed):
    """Samples of V_inf when the limit is a pure scaling of M_inf."""
    if mix.branch == BRANCH_MEAN:
        return mix.m0 * mix.m_samples
    if mix.branch == BRANCH_CENTRED and mix.stable.eta != 0:
        return None
    from .initlaw import sample_stable

    z = sample_stable(mix.stable, seed, size=len(mix.m_samples))
    return mix.m_samples ** (1.0 / mix.alpha) * z


def run_experiment(cfg, outdir=None, threads=None, echo=print):
    """Execute one configured scenario; returns (exit code, report dict)."""
    t_start = time.perf_counter()
    kern = kernel_from_spec(cfg.kernel)
    law = law_from_spec(cfg.law)
    outdir = outdir or cfg.output or os.path.join("out", cfg.scenario)
    w = _Writer(outdir, cfg)
    report = {"scenario": cfg.scenario, "kernel": kern.name, "law": law.name, "alpha": kern.alpha,
              "times": {}, "checks": {}}
    failures = []

    # limit mixture
    t0 = time.perf_counter()
    mix = None
    try:
        mix = limit_mixture(kern, law, n_proxy=cfg.n_proxy, N=cfg.mix_samples, seed=cfg.seed)
    except ValueError as exc:
        report["limit"] = {"skipped": str(exc)}
    if mix is not None:
        report["limit"] = {"branch": mix.branch, "n_proxy": mix.n_proxy, "mean_m": mix.mean_m(),
                           "stable": asdict(mix.stable) if mix.stable else None, "m0": mix.m0}
        phi_inf = mix.cf_grid(cfg.xi_max, cfg.grid_size)
        rows = [(x, z.real, z.imag) for x, z in zip(phi_inf.xi, phi_inf.values)]
        w.table("phi_inf.csv", ["xi", "re", "im"], rows, time.perf_counter() - t0, {"branch": mix.branch})
        w.table("m_samples.csv", ["m"], [(v,) for v in mix.m_samples], time.perf_counter() - t0,
                {"n_proxy": mix.n_proxy})
    vinf = _vinf_samples(mix, cfg.seed + 99) if mix is not None and not cfg.centered else None
    if cfg.centered and mix is not None and mix.branch == BRANCH_CENTRED and mix.stable.eta == 0:
        vinf = _vinf_samples(mix, cfg.seed + 99)

    phi_rows, dens_rows, w_rows = [], [], []
    phi0 = CfGrid.from_law(law, cfg.xi_max, cfg.grid_size) if cfg.wild else None
    terms = None
    if cfg.wild and cfg.wild_terms is not None:
        terms = wild_terms(phi0, kern, cfg.wild_terms)
    for t in cfg.times:
        t0 = time.perf_counter()
        pool = cfg.pool_size
        if pool is None and not cfg.centered and cfg.samples * math.exp(t) > AUTO_POOL_LEAVES:
            pool = min(cfg.samples, 100_000)
        ens = run_ensemble(kern, law, t, cfg.samples, seed=cfg.seed, centered=cfg.centered, pool_size=pool,
                           threads=threads, scenario=cfg.scenario)
        name = f"{cfg.scenario}_{_tag(t)}_{cfg.seed}.csv"
        w.table(name, ["value"], [(v,) for v in ens.values], time.perf_counter() - t0, {"ensemble": ens.meta})
        entry = {"mean": ens.mean(), "stderr": ens.stderr(), "second_moment": ens.moment(2)[0],
                 "pooled": ens.meta["pool"] is not None, "n_truncated": ens.meta["n_truncated"]}
        if cfg.wild:
            phi = wild_evaluate(terms, t) if terms is not None else wild_solve(
                phi0, kern, t, target_remainder=cfg.target_remainder)
            chk = phi.check(tol=1e-8)
            entry["wild"] = {"remainder": phi.meta["remainder"], "max_modulus": chk["max_modulus"],
                             "hermitian_defect": chk["hermitian_defect"]}
            if chk["max_modulus"] > 1 + 1e-8:
                failures.append(f"|phi(t={t:g})| exceeds 1")
            phi_rows += [(t, x, z.real, z.imag) for x, z in zip(phi.xi, phi.values)]
            mc = empirical_cf_grid(ens, cfg.xi_max, cfg.grid_size)
            d = cf_sup_distance(phi, mc)
            tol = 5 * mc.meta["max_stderr"] + phi.meta["remainder"]
            entry["wild"]["sup_vs_mc"] = d
            entry["wild"]["sup_tolerance"] = tol
            if t <= 2 and not entry["pooled"] and d > tol:
                failures.append(f"Wild and Monte Carlo disagree at t={t:g}: {d:.4g} > {tol:.4g}")
            with warnings.catch_warnings():
                warnings.simplefilter("error", PoorDecay)
                try:
                    dens = density_from_cf(phi)
                    dens_rows += [(t, v, f) for v, f in zip(dens.v, dens.f)]
                except PoorDecay:
                    entry["density"] = "skipped: CF does not decay on the grid"
        if mix is not None:
            lim = empirical_cf_grid(ens, cfg.xi_max, cfg.grid_size) if not cfg.wild else mc
            entry["sup_vs_limit"] = cf_sup_distance(lim, phi_inf)
        if vinf is not None:
            for g in cfg.gamma:
                wd = wasserstein_empirical(ens, vinf, g, seed=cfg.seed)
                w_rows.append((t, g, wd))
        report["times"][_tag(t)] = entry
        if echo:
            echo(f"  t = {t:g}: mean {entry['mean']:.5g} +- {entry['stderr']:.2g}")

    t0 = time.perf_counter()
    if phi_rows:
        w.table("phi_t.csv", ["t", "xi", "re", "im"], phi_rows, time.perf_counter() - t0)
    if dens_rows:
        w.table("density_t.csv", ["t", "v", "f"], dens_rows, time.perf_counter() - t0,
                {"convention": DENSITY_CONVENTION})
    fits = {}
    if w_rows:
        w.table("wasserstein.csv", ["t", "gamma", "distance"], w_rows, time.perf_counter() - t0)
        for g in cfg.gamma:
            if g > 2:
                continue
            floor = noise_floor(vinf, g, seed=cfg.seed)
            ts = np.array([r[0] for r in w_rows if r[1] == g])
            ds = np.array([r[2] for r in w_rows if r[1] == g])
            use = ds > 5 * floor
            theory = theory_slope(kern, g)
            try:
                fit = fit_decay(ts[use], ds[use], theory=theory)
                fits[f"{g:g}"] = {"slope": fit.slope, "theory_slope": theory, "r_squared": fit.r_squared,
                                  "window": list(fit.window), "noise_floor": floor}
            except DegenerateFit as exc:
                fits[f"{g:g}"] = {"slope": None, "theory_slope": theory, "r_squared": None,
                                  "window": None, "noise_floor": floor, "note": str(exc)}
        w.json("decay_fit.json", fits, time.perf_counter() - t0)

    # conservation laws that hold exactly for these kernels
    if abs(kern.alpha - 1) < 1e-9 and law.m0 is not None and not cfg.centered:
        z = max((abs(e["mean"] - law.m0) / max(e["stderr"], 1e-300) for e in report["times"].values()
                 if not e["pooled"]), default=0.0)
        report["checks"]["mean_conservation_max_z"] = z
        if z > 5:
            failures.append(f"mean not conserved (|z| = {z:.2f})")
    if abs(kern.alpha - 2) < 1e-9 and law.sigma2 is not None and law.m0 == 0:
        target = law.sigma2
        dev = max(abs(e["second_moment"] - target) for e in report["times"].values())
        report["checks"]["energy_max_deviation"] = dev
    report["checks"]["failures"] = failures
    report["wall_seconds"] = time.perf_counter() - t_start
    w.json("report.json", report, report["wall_seconds"])
    with open(w.path(f"{cfg.scenario}.gp"), "w") as fh:
        fh.write(_gnuplot(cfg, bool(dens_rows), bool(fits)))
    w.sidecar(f"{cfg.scenario}.gp", 0.0)
    return (EXIT_CHECK if failures else EXIT_OK), report


# ------------------------------------------------------------ entry point

def run(config, outdir=None, threads=None, echo=print, overrides=None):
    """Load a config (path or preset) and run it; returns the exit code."""
    try:
        cfg = load_config(config)
        for key, val in (overrides or {}).items():
            if val is not None:
                setattr(cfg, key, val)
        env = os.environ.get(SEED_ENV)
        if env:
            try:
                cfg.seed = int(env)
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = run_experiment(cfg, outdir, threads, echo)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in report["checks"]["failures"]:
        print(f"check failed: {f}", file=sys.stderr)
    return code


def main(argv=None):
    ap = argparse.ArgumentParser(prog="kinetic-clt", description="Kinetic central limit experiments")
    ap.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output", default=None, help="output directory")
    p_run.add_argument("--xi-max", type=float, default=None)
    p_run.add_argument("--grid-size", type=int, default=None)
    p_run.add_argument("--wild-terms", type=int, default=None)
    p_run.add_argument("--target-remainder", type=float, default=None)
    p_pre = sub.add_parser("presets", help="list built-in scenarios")
    p_pre.add_argument("--show", metavar="NAME", help="print the config of one preset")
    p_self = sub.add_parser("selftest", help="run the acceptance checks")
    p_self.add_argument("numbers", nargs="*", type=int)
    args = ap.parse_args(argv)
    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))

    if args.cmd == "presets":
        if args.show:
            if args.show not in PRESETS:
                print(f"error: unknown preset {args.show!r}", file=sys.stderr)
                return EXIT_CONFIG
            print(PRESETS[args.show][1].strip())
        else:
            print(list_presets())
        return EXIT_OK
    if args.cmd == "selftest":
        from .acceptance import run_checks

        results = run_checks(args.numbers or None)
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK

    overrides = {"xi_max": args.xi_max, "grid_size": args.grid_size, "wild_terms": args.wild_terms,
                 "target_remainder": args.target_remainder}
    return run(args.config, args.output, args.threads, overrides=overrides)


if __name__ == "__main__":
    sys.exit(main())
