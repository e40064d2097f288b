"""Command-line driver: ``symplab <subcommand> [--config PATH] [--seed N] [--workers N] [--out DIR]``.

Every subcommand merges a TOML file over its table of defaults (unknown keys
are errors), runs the experiment and writes JSON-lines records: a header line
carrying the format version, the package version and the effective
configuration, then one record per line.  Delimited tables are written next to
the records when ``--out`` is given.  Records never contain timings, so equal
config and seed give byte-identical output.

Exit status: 0 when every requested check passes, 1 on a numerical failure or
a failed check (named on stderr), 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import config as cfg
from ._version import __version__
from .errors import ConfigError, SymplabError
from .util import default_workers, make_rng, plain

RECORD_FORMAT = "symplab-records/1"
TABLE_FORMAT = "symplab-table/1"

GOLDEN_FREQ = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULTS = {
    "simulate": {
        "seed": 0,
        "workers": 0,
        "map": {"type": "standard", "a": 0.97},
        "initial": [[0.1, 0.2]],
        "steps": 1000,
        "symplectic_points": 100,
        "symplectic_tol": 1e-10,
    },
    "census": {
        "seed": 0,
        "workers": 0,
        "map": {"type": "standard", "a": 0.5},
        "region_lo": [0.0, 0.0],
        "region_hi": [1.0, 1.0],
        "periods": [1],
        "seeds_per_axis": 16,
        "tol": 1e-10,
        "lyapunov_steps": 0,
        "lyapunov_point": [0.1, 0.2],
        "lyapunov_discard": 100,
    },
    "normalform": {
        "seed": 0,
        "workers": 0,
        "alpha": [GOLDEN_FREQ],
        "twist": [{"exp": [2], "coeff": 0.5}],
        "remainder": [
            {"kind": "cos", "mode": [1], "exp": [3], "amp": 0.3},
            {"kind": "sin", "mode": [2], "exp": [4], "amp": 0.2},
            {"kind": "cos", "mode": [1], "exp": [5], "amp": 0.1},
        ],
        "degree": 4,
        "divisor_floor": 1e-10,
        "max_mode": 32,
        "radii": [0.2, 0.1, 0.05, 0.025],
        "n_theta": 32,
        "slope_window": 0.5,
        "diophantine_tau": 1.0,
        "diophantine_K": 100,
        "truncate_delta": 0.0,
        "shear_orders": [3, 4, 6],
        "shear_signs": [1],
    },
    "emergence": {
        "seed": 0,
        "workers": 0,
        "map": {"type": "standard", "a": 0.5},
        "region_lo": [0.0, 0.0],
        "region_hi": [1.0, 1.0],
        "samples": 40,
        "n_iter": 1000,
        "cell": 0.125,
        "scales": [0.2, 0.1, 0.05],
        "cauchy_eps": 0.0,
    },
    "construct": {
        "seed": 0,
        "workers": 0,
        "n": 1,
        "k": 4,
        "eta": "1/16",
        "M_cap": 8,
        "t": 0.3,
        "samples_per_p": 4,
        "n_iter": 10000,
        "eps_factor": 1.0,
        "tau": 1.0,
        "experiment": True,
    },
    "renorm": {
        "seed": 0,
        "workers": 0,
        "model": {
            "n": 1,
            "tau": 1.0,
            "xs": ["1/2"],
            "yu": ["1/2"],
            "a": "1/3",
            "b": "2",
            "c": "-1/2",
            "phi1": {"nvars": 2, "terms": [{"exp": [1, 0], "coeff": "3/10"}, {"exp": [0, 1], "coeff": "7/10"}]},
            "V": {"nvars": 1, "terms": [{"exp": [4], "coeff": "1/4"}]},
            "r": 3,
        },
        "nus": [1e-2, 5e-3, 2.5e-3],
        "grid": 33,
        "slope_lo": 0.8,
        "slope_hi": 1.2,
    },
    "verify": {
        "seed": 0,
        "workers": 0,
        "criteria": [],
        "determinism": True,
    },
}


class Output:
    """Collects records and tables for one run; nothing is written until :meth:`close`."""

    def __init__(self, subcommand, effective, out_dir=None, stream=None):
        self.subcommand = subcommand
        self.effective = effective
        self.out_dir = out_dir
        self.stream = stream if stream is not None else sys.stdout
        self.lines = []
        self.failures = []
        self.header = {
            "format": RECORD_FORMAT,
            "version": __version__,
            "subcommand": subcommand,
            "config": plain(effective),
        }
        self._emit(self.header)

    def _emit(self, obj):
        self.lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))

    def record(self, kind, **values):
        self._emit({"record": kind, **plain(values)})

    def check(self, name, passed, **values):
        self.record("check", name=name, passed=bool(passed), **values)
        if not passed:
            self.failures.append(name)

    def table(self, name, text):
        """Attach a delimited table; it is written as ``<subcommand>-<name>.csv`` under ``--out``."""
        fname = f"{self.subcommand}-{name}.csv"
        self.record("table", name=name, file=fname)
        if self.out_dir is None:
            return
        head = f"# {TABLE_FORMAT} symplab {__version__}\n# config {json.dumps(self.header['config'], sort_keys=True)}\n"
        with open(os.path.join(self.out_dir, fname), "w", encoding="utf-8") as fh:
            fh.write(head + text)

    def text(self):
        return "\n".join(self.lines) + "\n"

    def close(self):
        data = self.text()
        if self.out_dir is not None:
            with open(os.path.join(self.out_dir, f"{self.subcommand}.jsonl"), "w", encoding="utf-8") as fh:
                fh.write(data)
        self.stream.write(data)
        self.stream.flush()


def _workers(conf):
    w = int(conf.get("workers", 0))
    return default_workers() if w <= 0 else w


def _region(conf):
    lo = np.asarray(conf["region_lo"], float)
    hi = np.asarray(conf["region_hi"], float)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ConfigError("region_hi must exceed region_lo componentwise", field="region_hi")
    return lo, hi


def _map(conf):
    from .maps import map_from_config

    try:
        return map_from_config(conf["map"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid map specification: {exc}", field="map") from None
    except SymplabError as exc:
        raise ConfigError(str(exc), field="map.type") from None


# ---------------------------------------------------------------------------
# subcommands


def run_simulate(conf, out):
    from .maps import check_symplectic, export_orbit, iterate_orbit

    fmap = _map(conf)
    Z = np.atleast_2d(np.asarray(conf["initial"], float))
    if Z.shape[1] != fmap.dim:
        raise ConfigError(f"initial points need {fmap.dim} coordinates", field="initial")
    orbit = iterate_orbit(fmap, Z, int(conf["steps"]))
    for i in range(len(Z)):
        out.record("orbit", index=i, initial=Z[i], final=orbit[-1, i], steps=int(conf["steps"]))
        out.table(f"orbit{i}", export_orbit(orbit[:, i, :]))
    pts = orbit.reshape(-1, fmap.dim)
    m = int(conf["symplectic_points"])
    if m > 0:
        idx = np.linspace(0, len(pts) - 1, min(m, len(pts))).astype(int)
        rep = check_symplectic(fmap, pts[idx], tol=float(conf["symplectic_tol"]))
        out.check("symplecticity", rep.passed, max_defect=rep.max_defect, points=rep.points_tested)


def run_census(conf, out):
    from .census import census, lyapunov_spectrum

    fmap = _map(conf)
    region = _region(conf)
    report, searches = census(
        fmap, region, [int(k) for k in conf["periods"]], int(conf["seeds_per_axis"]), float(conf["tol"]), _workers(conf)
    )
    for k, s in searches.items():
        out.record(
            "period", k=k, count_exact=s.count_exact, count_dividing=s.count_dividing, continuum=s.continuum,
            dropped=s.dropped, seeds=s.seeds,
        )
        for p in s.points:
            out.record("point", k=k, point=p.point, period=p.period, residual=p.residual, multipliers=p.multipliers)
        worst = max((p.residual for p in s.points), default=0.0)
        out.check(f"residual k={k}", worst <= float(conf["tol"]), max_residual=worst)
    out.record("growth", statistic=report.growth_stat)
    out.table("counts", report.table())
    steps = int(conf["lyapunov_steps"])
    if steps > 0:
        rep = lyapunov_spectrum(fmap, np.asarray(conf["lyapunov_point"], float), steps, int(conf["lyapunov_discard"]))
        bound = 5 * math.log(steps) / steps
        out.record("lyapunov", exponents=rep.exponents, pairing_defect=rep.pairing_defect, k=steps)
        out.check("lyapunov pairing", rep.pairing_defect <= bound, bound=bound)


def _fourier_from_terms(terms, n):
    from .normalform import FourierPoly

    acc = FourierPoly.zero(n)
    for i, t in enumerate(terms):
        kind = t.get("kind", "cos")
        if kind not in ("cos", "sin"):
            raise ConfigError("kind must be 'cos' or 'sin'", field=f"remainder[{i}].kind")
        try:
            ctor = FourierPoly.cosine if kind == "cos" else FourierPoly.sine
            acc = acc + ctor(t["mode"], t["exp"], float(t["amp"]))
        except KeyError as exc:
            raise ConfigError(f"missing {exc}", field=f"remainder[{i}]") from None
    return acc


def _coeff(v):
    return Fraction(v) if isinstance(v, str) else v


def run_normalform(conf, out):
    from .census import detect_periodic_spot
    from .normalform import (
        GeneratingFunction,
        GeneratingFunctionMap,
        NormalizedMap,
        diophantine_margin,
        is_identity_exact,
        loglog_slope,
        normalize,
        oscillation_profile,
        shear_to_rotation,
        truncate_generating,
    )
    from .polynomial import Polynomial

    alpha = np.asarray(conf["alpha"], float)
    n = len(alpha)
    w = diophantine_margin(alpha, float(conf["diophantine_tau"]), int(conf["diophantine_K"]))
    out.record("diophantine", margin=w.margin, argmin=w.argmin, tau=w.tau, K=w.K)
    Q = Polynomial(n, {tuple(t["exp"]): float(_coeff(t["coeff"])) for t in conf["twist"]})
    rem = _fourier_from_terms(conf["remainder"], n)
    S = GeneratingFunction(alpha, Q, rem)
    f = GeneratingFunctionMap(S)
    D = int(conf["degree"])
    radii = [float(r) for r in conf["radii"]]
    if D > 0:
        SD = normalize(S, D, divisor_floor=float(conf["divisor_floor"]), max_mode=int(conf["max_mode"]))
        for d in range(D + 3):
            out.record("oscillating_mass", degree=d, before=S.oscillating_mass(d), after=SD.oscillating_mass(d))
        out.record("twist_after", terms=[[list(e), float(c)] for e, c in sorted(SD.Q.terms.items())])
        g = NormalizedMap(f, SD.changes)
        prof = oscillation_profile(g, radii, int(conf["n_theta"]))
        raw = oscillation_profile(f, radii, int(conf["n_theta"]))
        slope = loglog_slope(radii, prof)
        lines = ["r,before,after"] + [f"{r!r},{a!r},{b!r}" for r, a, b in zip(radii, raw.tolist(), prof.tolist())]
        out.table("oscillation", "\n".join(lines) + "\n")
        out.check(
            "flattening slope", abs(slope - (D + 2)) <= float(conf["slope_window"]), slope=slope, target=D + 2,
            slope_before=loglog_slope(radii, raw),
        )
    delta = float(conf["truncate_delta"])
    if delta > 0:
        ft = GeneratingFunctionMap(truncate_generating(S, delta))
        rng = make_rng(int(conf["seed"]))
        th = rng.random((400, n))
        r = rng.uniform(-2 * delta, 2 * delta, (400, n))
        z = np.concatenate([th, r], axis=1)
        diff = np.abs(ft(z) - f(z))
        diff[:, :n] = np.minimum(diff[:, :n], 1 - diff[:, :n])
        out.record("truncation", delta=delta, sup_difference=float(diff.max()))
    signs = tuple(int(v) for v in conf["shear_signs"])
    for s in conf["shear_orders"]:
        sh = shear_to_rotation(signs, int(s))
        exact = is_identity_exact(sh.exact_power(int(s))) if sh.exact is not None else None
        m = len(signs)
        frac = detect_periodic_spot(sh.as_map(), (-np.ones(2 * m), np.ones(2 * m)), int(s))
        out.record("shear", s=int(s), eps=sh.eps, exact_identity=exact, spot_fraction=frac)
        out.check(f"shear s={s}", (exact is not False) and frac == 1.0)


def run_emergence(conf, out):
    from .measures import build_ensemble, emergence_curve

    fmap = _map(conf)
    lo, hi = _region(conf)
    rng = make_rng(int(conf["seed"]))
    Z = lo + (hi - lo) * rng.random((int(conf["samples"]), fmap.dim))
    ce = float(conf["cauchy_eps"])
    ens = build_ensemble(fmap, Z, int(conf["n_iter"]), float(conf["cell"]), cauchy_eps=ce if ce > 0 else None)
    if ens.cauchy is not None:
        out.record("cauchy", converged=int(np.count_nonzero(ens.converged)), samples=len(ens), max_bound=ens.cauchy.max())
    curve = emergence_curve(ens, [float(e) for e in conf["scales"]], _workers(conf))
    for e, a, b in zip(curve.scales, curve.lower, curve.upper):
        out.record("scale", eps=e, lower=a, upper=b)
    out.record(
        "order", estimate=curve.order_estimate, from_lower=curve.order_lower, from_upper=curve.order_upper,
        samples=curve.samples, monte_carlo_error=curve.monte_carlo_error, normalization=curve.normalization,
        centres_restricted=curve.centres_restricted,
    )
    out.table("curve", curve.table())
    out.table("ensemble", ens.to_table())
    out.check("bounds ordered", bool(np.all(curve.lower <= curve.upper)))


def run_construct(conf, out):
    from .construction import (
        atom_separation,
        build_boxes,
        build_phi,
        build_rearrangement,
        lower_bound_experiment,
        volume_check,
    )

    try:
        eta = Fraction(conf["eta"])
    except (ValueError, ZeroDivisionError):
        raise ConfigError("eta must be a rational number such as '1/16'", field="eta") from None
    fam = build_boxes(int(conf["n"]), int(conf["k"]), eta, M_cap=int(conf["M_cap"]))
    out.record("boxes", **fam.to_config(), Q=len(fam.Q), P=len(fam.P), J=len(fam.J))
    phi = build_phi(fam, seed=int(conf["seed"]))
    v = phi.verification
    out.record("colouring", method=phi.method, attempts=phi.attempts, table=phi.table)
    out.check(
        "colouring properties", v.passed, max_fibre=v.max_fibre, fibre_bound=v.fibre_bound,
        max_overlap=v.max_overlap, overlap_bound=v.overlap_bound,
    )
    vol = volume_check(fam, phi)
    out.check("volume count", vol.passed, max_union_volume=vol.max_fibre_volume, target_volume=vol.target_volume)
    sep = atom_separation(fam, phi)
    out.check("statistic separation", sep.passed, minimum=sep.minimum, bound=sep.bound, pair=sep.pair)
    if not conf["experiment"]:
        return
    rea = build_rearrangement(fam, phi)
    out.record("rearrangement", shape=rea.shape, strip_cells=rea.strip_cells, target_cells=rea.target_cells)
    out.check("rearrangement containment", rea.containment_min == 1.0 and rea.boundary_fixed,
              containment_min=rea.containment_min, boundary_fixed=rea.boundary_fixed)
    rep = lower_bound_experiment(
        fam, phi, rea, t=float(conf["t"]), samples_per_p=int(conf["samples_per_p"]), n_iter=int(conf["n_iter"]),
        eps_factor=float(conf["eps_factor"]), tau=float(conf["tau"]), seed=int(conf["seed"]), workers=_workers(conf),
    )
    out.record("lower_bound", **rep.records())
    out.check("emergence lower bound", rep.lower_ge_P_over_10, lower=rep.lower, P_over_10=rep.P_over_10)


def run_renorm(conf, out):
    from .renorm import HomoclinicModel, check_model_identities, convergence_check, henon_limit

    try:
        model = HomoclinicModel.from_config(conf["model"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid model: {exc}", field="model") from None
    ids = check_model_identities(model)
    out.check(
        "model identities", ids.passed, bc_defect=ids.bc_defect, c_inverse_b_defect=ids.c_inverse_b_defect,
        symmetry_defect=ids.symmetry_defect, incidence_residual=ids.incidence_residual,
    )
    lim = henon_limit(model)
    out.record("limit", C=model.C_matrix(), V=[[list(e), float(c)] for e, c in sorted(lim.V.terms.items())])
    rep = convergence_check(model, [float(v) for v in conf["nus"]], int(conf["grid"]), _workers(conf))
    for nu, j, d in zip(rep.nus, rep.js, rep.distances):
        out.record("scale", nu=nu, j=j, distance=d)
    out.table("convergence", rep.table())
    ok = rep.slope is not None and float(conf["slope_lo"]) <= rep.slope <= float(conf["slope_hi"])
    out.check("convergence slope", ok, slope=rep.slope, monotone=rep.monotone)


def run_verify(conf, out):
    from .acceptance import run_suite

    only = set(int(c) for c in conf["criteria"]) or None

    def echo(r):
        print(r.line(), file=sys.stderr)

    results = run_suite(int(conf["seed"]), only=only, determinism=bool(conf["determinism"]), echo=echo)
    for r in results:
        out.record("criterion", **r.record())
        if not r.ok:
            out.failures.append(f"criterion {r.number} ({r.name})")


RUNNERS = {
    "simulate": run_simulate,
    "census": run_census,
    "normalform": run_normalform,
    "emergence": run_emergence,
    "construct": run_construct,
    "renorm": run_renorm,
    "verify": run_verify,
}


def build_parser():
    p = argparse.ArgumentParser(prog="symplab", description="Numerical experiments on symplectic maps.")
    p.add_argument("--version", action="version", version=f"symplab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "iterate orbits and check symplecticity along them",
        "census": "periodic points and Lyapunov exponents",
        "normalform": "Diophantine margin, Birkhoff steps, truncation, shear-to-rotation",
        "emergence": "empirical-measure ensemble and emergence curve",
        "construct": "box family, colouring, rearrangement and emergence lower bound",
        "renorm": "homoclinic model identities and Henon-limit convergence",
        "verify": "run the acceptance suite",
    }
    for name in RUNNERS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", metavar="PATH", help="TOML file overriding the defaults")
        sp.add_argument("--seed", type=int, help="seed of the PCG64 generator")
        sp.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
        sp.add_argument("--out", metavar="DIR", help="directory for records and tables")
        sp.add_argument("--print-defaults", action="store_true", help="print the default config as TOML and exit")
    return p


def effective_config(subcommand, path=None, seed=None, workers=None):
    defaults = DEFAULTS[subcommand]
    user, text = ({}, None) if path is None else _load(path)
    conf = cfg.merge(defaults, user, text)
    if seed is not None:
        conf["seed"] = int(seed)
    if workers is not None:
        conf["workers"] = int(workers)
    return conf


def _load(path):
    try:
        return cfg.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(cfg.dumps(DEFAULTS[args.subcommand]))
        return 0
    try:
        conf = effective_config(args.subcommand, args.config, args.seed, args.workers)
    except ConfigError as exc:
        print(f"symplab: config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    out = Output(args.subcommand, conf, args.out)
    status = 0
    try:
        RUNNERS[args.subcommand](conf, out)
    except ConfigError as exc:
        print(f"symplab: config error: {exc}", file=sys.stderr)
        return 2
    except SymplabError as exc:
        out.record("error", kind=type(exc).__name__, message=str(exc))
        out.failures.append(type(exc).__name__)
        print(f"symplab: numerical failure in {args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 1
    out.close()
    if out.failures:
        print(f"symplab: failed checks: {', '.join(out.failures)}", file=sys.stderr)
        status = 1
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
