"""Command-line driver.

    sector-heat <solve|verify|asymptotics|eigen|report> --config run.ini [--out DIR] [--jobs N]

The configuration is an INI file; every key has a default, listed in
``DEFAULTS`` below with its unit. Exit codes: 0 all checks passed,
1 some check failed, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .domain import DomainSpec, Field, SectorGrid
from .exceptions import ConfigError, GridCoverageError, NumericalError, SectorHeatError
from .report import VerificationReport, fingerprint

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SUBCOMMANDS = ("solve", "verify", "asymptotics", "eigen", "report")

# section -> key -> (default, unit / meaning)
DEFAULTS = {
    "domain": {
        "N": ("2", "ambient dimension"),
        "m": ("1", "number of Dirichlet axes x_1..x_m"),
        "gamma": ("1.0", "weight exponent, 0 < gamma < N"),
        "alpha": ("1.0", "absorption exponent, > 0"),
    },
    "solver": {
        "splitting": ("strang", "strang | lie"),
        "dt0": ("", "first time step; empty means 2 h^2"),
        "growth": ("1.2", "geometric growth of the time step"),
        "dt_max": ("0.5", "largest time step"),
        "snapshots": ("0.25, 1, 4", "output times, increasing"),
        "h": ("0.1", "grid spacing (length)"),
        "R": ("20", "half-width of the computational box (length)"),
        "nonlinearity": ("power", "power | exp"),
    },
    "data": {
        "profile": ("psi0", "psi0 | truncated | logperiodic | constant | gammaprime"),
        "amp": ("1.0", "amplitude multiplier"),
        "lam": ("1.0", "argument scaling x -> lam x"),
        "rho": ("1.0", "truncation radius (truncated)"),
        "keep": ("outer", "inner | outer (truncated)"),
        "a": ("0.5", "modulation depth (logperiodic)"),
        "omega": ("1.0", "log-frequency (logperiodic)"),
        "phase": ("0.0", "phase (logperiodic)"),
        "A": ("1.0", "constant value (constant)"),
        "gamma_prime": ("1.5", "tail exponent (gammaprime)"),
    },
    "verify": {
        "checks": ("kernel_identity, closedform, domination", "comma list of checks"),
        "times": ("0.25, 1, 4", "times for kernel checks"),
        "tol": ("1e-4", "tolerance for solver inequalities"),
        "kato_scale": ("0.5", "second datum = kato_scale * data"),
        "elliptic_h": ("0.0025", "grid spacing of the elliptic check"),
        "elliptic_order": ("2", "stencil order 2 | 4 | 6"),
        "samples": ("200", "random samples for the domination check"),
    },
    "asymptotics": {
        "ladder": ("2, 4, 8", "dilation factors (critical)"),
        "times": ("4, 16, 64", "time ladder (supercritical, subcritical convergence)"),
        "amplitudes": ("1, 10, 100, 1000, 10000, 1000000", "constant-data ladder (subcritical)"),
        "window": ("3.0", "window box [0, window]^N"),
        "window_h": ("0.1", "window grid spacing"),
        "tol": ("5e-3", "self-similarity tolerance (critical)"),
        "sandwich_tol": ("1e-3", "profile sandwich tolerance (subcritical)"),
    },
    "eigen": {
        "cases": ("1:1", "comma list of N:m pairs"),
        "h": ("0.005", "grid spacing"),
        "tol": ("0.01", "relative tolerance against the Bessel oracle"),
    },
    "run": {
        "seed": ("0", "seed for random sampling"),
        "out": ("sector_heat_out", "output directory (overridden by --out)"),
    },
}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma list of numbers, got {text!r}") from exc


@dataclass
class RunConfig:
    parser: configparser.ConfigParser

    # ---------------------------------------------------------- parsing
    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for section in cp.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown section [{section}]")
            for key in cp[section]:
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
        for section, keys in DEFAULTS.items():
            if not cp.has_section(section):
                cp.add_section(section)
            for key, (default, _) in keys.items():
                if key not in cp[section]:
                    cp[section][key] = default
        cfg = cls(cp)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_text(text)

    def to_text(self) -> str:
        buf = io.StringIO()
        self.parser.write(buf)
        return buf.getvalue()

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.to_text())

    def get(self, section: str, key: str) -> str:
        return self.parser[section][key].strip()

    def num(self, section: str, key: str) -> float:
        try:
            return float(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be a number") from exc

    def integer(self, section: str, key: str) -> int:
        v = self.num(section, key)
        if v != int(v):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(v)

    # ---------------------------------------------------------- typed views
    def validate(self):
        """Build every typed object once so bad values fail before any work."""
        try:
            self.spec()
            self.solver()
            self.data()
            for key in ("tol", "kato_scale", "elliptic_h"):
                self.num("verify", key)
            self.integer("verify", "elliptic_order")
            self.integer("verify", "samples")
            if not _floats(self.get("verify", "times")):
                raise ConfigError("[verify] times is empty")
            self.eigen_cases()
            for key in ("ladder", "times", "amplitudes"):
                _floats(self.get("asymptotics", key))
            for key in ("window", "window_h", "tol", "sandwich_tol"):
                self.num("asymptotics", key)
            self.num("eigen", "h")
            self.num("eigen", "tol")
            self.integer("run", "seed")
            self.checks()
        except ConfigError:
            raise
        except (ValueError, TypeError, SectorHeatError) as exc:
            raise ConfigError(str(exc)) from exc

    def spec(self) -> DomainSpec:
        return DomainSpec(self.integer("domain", "N"), self.integer("domain", "m"),
                          self.num("domain", "gamma"), self.num("domain", "alpha"))

    def solver(self):
        from .solver import SolverConfig
        dt0 = self.get("solver", "dt0")
        return SolverConfig(
            splitting=self.get("solver", "splitting"),
            dt0=float(dt0) if dt0 else None,
            growth=self.num("solver", "growth"),
            dt_max=self.num("solver", "dt_max"),
            snapshots=_floats(self.get("solver", "snapshots")),
            h=self.num("solver", "h"),
            R=self.num("solver", "R"),
            nonlinearity=self.get("solver", "nonlinearity"),
        )

    def data(self):
        from . import weighted_space as ws
        kind = self.get("data", "profile")
        amp, lam = self.num("data", "amp"), self.num("data", "lam")
        if kind == "psi0":
            return ws.Psi0(amp, lam)
        if kind == "truncated":
            return ws.TruncatedPsi0(amp, lam, rho=self.num("data", "rho"), keep=self.get("data", "keep"))
        if kind == "logperiodic":
            return ws.LogPeriodicPsi0(amp, lam, a=self.num("data", "a"),
                                      omega=self.num("data", "omega"), phase=self.num("data", "phase"))
        if kind == "constant":
            return ws.AntisymConstant(amp, lam, A=self.num("data", "A"))
        if kind == "gammaprime":
            return ws.GammaPrimeTail(amp, lam, gamma_prime=self.num("data", "gamma_prime"))
        raise ConfigError(f"unknown profile {kind!r}")

    def checks(self) -> tuple:
        names = tuple(c.strip() for c in self.get("verify", "checks").split(",") if c.strip())
        bad = [c for c in names if c not in CHECKS]
        if bad or not names:
            raise ConfigError(f"unknown checks {bad}; choose from {sorted(CHECKS)}")
        return names

    def eigen_cases(self) -> tuple:
        cases = []
        for item in self.get("eigen", "cases").split(","):
            item = item.strip()
            if not item:
                continue
            try:
                N, m = (int(v) for v in item.split(":"))
            except ValueError as exc:
                raise ConfigError(f"eigen case {item!r} must read N:m") from exc
            cases.append((N, m))
        if not cases:
            raise ConfigError("no eigen cases")
        return tuple(cases)


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path: Path, header, rows, fp: str):
    with open(path, "w") as fh:
        fh.write(f"# config_fingerprint={fp}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_field(path: Path, f: Field, fp: str):
    pts = f.grid.points()
    header = [f"x{i + 1}" for i in range(pts.shape[1])] + ["value", "time"]
    rows = (list(p) + [v, f.time] for p, v in zip(pts.tolist(), f.values.ravel().tolist()))
    write_table(path, header, ([float(x) for x in r] for r in rows), fp)


def write_reports(path: Path, reports):
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(rep.to_text() + "\n")


def _summary(out: Path, reports, fp: str, name: str = "summary.csv"):
    write_table(out / name, ["check", "violation", "tolerance", "passed"],
                [(r.name, r.violation, r.tol, "true" if r.passed else "false") for r in reports], fp)


# ---------------------------------------------------------------- checks

def _check_kernel_identity(rc: RunConfig, rng):
    from .heat_kernel import kernel_identity_check
    spec = rc.spec()
    pts = rng.uniform(0.05, 3.0, size=(4, spec.N))
    return [kernel_identity_check(_floats(rc.get("verify", "times")), pts, spec)]


def _check_closedform(rc: RunConfig, rng):
    from .heat_kernel import closed_form_check
    spec, cfg = rc.spec(), rc.solver()
    grid = cfg.grid(spec)
    return [closed_form_check(t, spec, grid) for t in _floats(rc.get("verify", "times"))]


def _check_domination(rc: RunConfig, rng):
    from .heat_kernel import kernel_domination_check
    spec = rc.spec()
    n = rc.integer("verify", "samples")
    t = rng.uniform(0.05, 5.0, size=n)
    x = rng.uniform(0.0, 4.0, size=(n, spec.N))
    y = rng.uniform(0.0, 4.0, size=(n, spec.N))
    return [kernel_domination_check(t, x, y, spec)]


def _trajectory(rc: RunConfig):
    from .solver import solve
    return solve(rc.data(), rc.spec(), rc.solver())


def _check_upper(rc: RunConfig, rng):
    from .verification import check_upper_estimate
    return [check_upper_estimate(_trajectory(rc), tol=rc.num("verify", "tol"))]


def _check_generalized(rc: RunConfig, rng):
    from .verification import generalized_upper_bound
    return [generalized_upper_bound(_trajectory(rc), tol=rc.num("verify", "tol"))]


def _check_kato(rc: RunConfig, rng):
    from .verification import check_kato_comparison
    u0 = rc.data()
    v0 = u0.scaled(rc.num("verify", "kato_scale"))
    cfg = rc.solver()
    return [check_kato_comparison(u0, v0, cfg.snapshots, rc.spec(), cfg, tol=rc.num("verify", "tol"))]


def _check_universal(rc: RunConfig, rng):
    from .solver import universal_bound
    traj = _trajectory(rc)
    viol = max(float(np.max(np.abs(s.values))) - universal_bound(traj.spec, s.time)
               for s in traj.snapshots)
    return [VerificationReport("universal_bound", viol, 0.0, traj.fingerprint())]


def _check_elliptic(rc: RunConfig, rng):
    from .verification import annulus_grid, elliptic_residual
    spec = rc.spec()
    grid = annulus_grid(spec, rc.num("verify", "elliptic_h"), planar=spec.N > 2)
    return [elliptic_residual(spec, grid, order=rc.integer("verify", "elliptic_order"))]


def _check_separable(rc: RunConfig, rng):
    from .eigen import separable_eigen_check
    spec = rc.spec()
    return [separable_eigen_check(spec, SectorGrid.box(spec, upper=1.0, h=rc.num("eigen", "h"), lower=-1.0))]


CHECKS = {
    "kernel_identity": _check_kernel_identity,
    "closedform": _check_closedform,
    "domination": _check_domination,
    "universal": _check_universal,
    "upper": _check_upper,
    "generalized": _check_generalized,
    "kato": _check_kato,
    "elliptic": _check_elliptic,
    "separable": _check_separable,
}


# ---------------------------------------------------------------- subcommands

def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_solve(rc: RunConfig, out: Path, jobs: int) -> int:
    from .solver import universal_bound
    traj = _trajectory(rc)
    fp = rc.fingerprint
    rows = []
    for k, snap in enumerate(traj.snapshots):
        write_field(out / f"field_{k:03d}.csv", snap, fp)
        peak = float(np.max(np.abs(snap.values)))
        rows.append((snap.time, peak, universal_bound(traj.spec, snap.time), snap.tail))
    write_table(out / "solve_summary.csv", ["time", "max_abs", "universal_bound", "quad_tail"], rows, fp)
    rep = VerificationReport("universal_bound", max(r[1] - r[2] for r in rows), 0.0, fp,
                             {"steps": traj.steps, "splitting_error": traj.splitting_error,
                              "undershoot": traj.undershoot})
    write_reports(out / "reports.txt", [rep])
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_verify(rc: RunConfig, out: Path, jobs: int) -> int:
    seed = rc.integer("run", "seed")
    names = rc.checks()

    def run(i_name):
        i, name = i_name
        # one independent stream per check keeps results independent of --jobs
        return CHECKS[name](rc, np.random.default_rng([seed, i]))

    results = _map(run, list(enumerate(names)), jobs)
    reports = [r for group in results for r in group]
    reports = [replace(r, fingerprint=f"{rc.fingerprint}:{r.fingerprint}") for r in reports]
    write_reports(out / "reports.txt", reports)
    _summary(out, reports, rc.fingerprint)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_asymptotics(rc: RunConfig, out: Path, jobs: int) -> int:
    from . import asymptotics as asy
    spec, cfg, u0 = rc.spec(), rc.solver(), rc.data()
    fp = rc.fingerprint
    window = asy.default_window(spec, rc.num("asymptotics", "window"), rc.num("asymptotics", "window_h"))
    regime = asy.classify_regime(spec).regime
    reports, rows = [], []
    if regime is asy.Regime.CRITICAL:
        ladder = asy.RescaleLadder(2.0 / spec.alpha, _floats(rc.get("asymptotics", "ladder")), window)
        rep = asy.critical_selfsimilar_check(u0, ladder, spec, cfg, tol=rc.num("asymptotics", "tol"))
        reports.append(rep)
        rows = list(zip(ladder.values, rep.details["residuals"]))
        write_table(out / "asymptotics.csv", ["lambda", "residual"], rows, fp)
    elif regime is asy.Regime.SUPERCRITICAL:
        times = _floats(rc.get("asymptotics", "times"))
        curve = asy.supercritical_deviation(u0, times, spec, cfg, window)
        d = curve.deviations
        viol = max([curve.slope] + [b - a for a, b in zip(d, d[1:])])
        reports.append(VerificationReport("supercritical_deviation", viol, 0.0, fp,
                                          {"slope": curve.slope, "deviations": d}))
        write_table(out / "asymptotics.csv", ["time", "deviation"], list(zip(times, d)), fp)
    else:
        amps = _floats(rc.get("asymptotics", "amplitudes"))
        est = asy.subcritical_profile(spec, cfg, amps, window=window, jobs=jobs)
        tol = rc.num("asymptotics", "sandwich_tol")
        reports.append(VerificationReport("profile_sandwich", -min(est.sandwich.values()), tol, fp,
                                          dict(est.sandwich)))
        reports.append(VerificationReport("profile_monotone", est.monotone_violation, tol, fp,
                                          {"residuals": est.residuals}))
        write_field(out / "profile.csv", est.g, fp)
        write_table(out / "asymptotics.csv", ["amplitude", "ladder_residual"],
                    list(zip(amps[1:], est.residuals)), fp)
    write_reports(out / "reports.txt", reports)
    _summary(out, reports, fp)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_eigen(rc: RunConfig, out: Path, jobs: int) -> int:
    from .eigen import bessel_oracle, sector_ball_eigen
    h, tol = rc.num("eigen", "h"), rc.num("eigen", "tol")
    base = rc.spec()

    def run(case):
        N, m = case
        # the eigenvalue does not involve gamma; any admissible value will do
        spec = DomainSpec(N, m, 0.5 * N, base.alpha)
        res = sector_ball_eigen(spec, h)
        return N, m, res, bessel_oracle(N + 2 * m)

    results = _map(run, rc.eigen_cases(), jobs)
    rows, reports = [], []
    for N, m, res, oracle in results:
        rel = abs(res.eigenvalue - oracle) / oracle
        rows.append((N, m, h, res.eigenvalue, oracle, rel, res.iterations))
        reports.append(VerificationReport(f"eigen_N{N}_m{m}", rel, tol, rc.fingerprint,
                                          {"eigenvalue": res.eigenvalue, "oracle": oracle}))
    write_table(out / "eigen.csv", ["N", "m", "h", "eigenvalue", "oracle", "rel_error", "iterations"],
                rows, rc.fingerprint)
    write_reports(out / "reports.txt", reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_report(rc: RunConfig, out: Path, jobs: int) -> int:
    reports = []
    for path in sorted(out.rglob("reports.txt")):
        for block in path.read_text().split("\n\n"):
            if block.strip():
                reports.append(VerificationReport.from_text(block))
    if not reports:
        raise ConfigError(f"no reports found under {out}")
    _summary(out, reports, rc.fingerprint, name="report_summary.csv")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "asymptotics": cmd_asymptotics,
            "eigen": cmd_eigen, "report": cmd_report}


def _jobs(arg: Optional[int]) -> int:
    if arg is not None:
        jobs = arg
    else:
        env = os.environ.get("SECTOR_HEAT_JOBS", "1")
        try:
            jobs = int(env)
        except ValueError as exc:
            raise ConfigError(f"SECTOR_HEAT_JOBS must be an integer, got {env!r}") from exc
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return jobs


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sector-heat", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker threads (default: $SECTOR_HEAT_JOBS or 1)")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        rc = RunConfig.from_file(args.config)
        jobs = _jobs(args.jobs)
        out = Path(args.out or rc.get("run", "out"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](rc, out, jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, GridCoverageError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SectorHeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.command}: {'ok' if code == EXIT_OK else 'checks failed'} -> {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
