"""Command-line front end.

Every command writes its artifacts into ``--out`` (CSV series, PNG figures
with CSV twins, and a ``<command>.json`` summary embedding the resolved
configuration and a hash of the inputs).  Exit codes: 0 success, 1 invalid
input, 2 failed hypothesis check (trapping or star shape), 3 numerical
failure.  Errors are reported on stderr as ``ERROR <module> <code> <detail>``.
"""
import argparse
import glob
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .exceptions import MapFormatError, PluridynError, RegionFormatError, TrappingViolated

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("validate-map", "check-region", "green", "mu", "tau", "nu", "entropy", "mixing",
            "counterexample", "potentials", "preimage-stat", "report")


class HypothesisFailure(Exception):
    """A hypothesis check failed; carries the summary to write before exiting 2."""

    def __init__(self, module, code, detail, summary):
        super().__init__(detail)
        self.module, self.code, self.summary = module, code, summary


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"ERROR cli usage {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser():
    p = _Parser(prog="pluridyn", description="Attracting currents and equilibrium measures on P^2.")
    p.add_argument("--version", action="version", version=f"pluridyn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--map", help="map-definition file (default: perturbed power map, eps 0.05)")
        s.add_argument("--region", help="region-definition file (default: fiber cone t = 0.2)")
        s.add_argument("--n", type=int, default=None, help="iteration count")
        s.add_argument("--nodes", type=int, default=None, help="sample / node budget")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--tol", type=float, default=None)
        s.add_argument("--threads", type=int, default=None)
        s.add_argument("--d", type=int, default=2, help="degree of the built-in power map")
        if name == "nu":
            s.add_argument("--mode", choices=("density", "exact"), default="density")
        if name == "entropy":
            s.add_argument("--eps", type=float, action="append", default=None)
    return p


# -- helpers ---------------------------------------------------------------------------

def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    return v


def _load(args):
    from .endomorphism import perturbed_power_map, read_map
    from .regions import fiber_cone, read_region, region_to_text

    f = read_map(args.map) if args.map else perturbed_power_map(0.05)
    U = read_region(args.region) if args.region else fiber_cone(0.2)
    h = hashlib.sha256()
    h.update(f.to_text().encode())
    h.update(region_to_text(U).encode())
    return f, U, h.hexdigest()[:16]


def _config(args, **resolved):
    cfg = {k: v for k, v in vars(args).items() if k not in ("out",)}
    cfg.update(resolved)
    return _plain(cfg)


def _write_summary(args, name, summary):
    path = os.path.join(args.out, f"{name}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _stem(args, name):
    return os.path.join(args.out, name)


def _base_line(U, seed):
    from .attractor import nearby_lines

    return nearby_lines(U.projection.target, 1, 0.05, seed)[0]


# -- commands ---------------------------------------------------------------------------

def cmd_validate_map(args):
    from .endomorphism import validate

    f, U, h = _load(args)
    rep = validate(f, trials=args.nodes or 20000, seed=args.seed)
    return {"ok": rep.ok, "min_ratio": rep.min_ratio, "resultant_abs": rep.resultant_abs,
            "map_hash": f.hash, "k": f.k, "d": f.d, "input_hash": h, "config": _config(args)}


def cmd_check_region(args):
    from .attractor import check_star_shaped, check_trapping
    from .plotting import write_csv

    f, U, h = _load(args)
    summary = {"input_hash": h, "region": U.spec(), "config": _config(args)}
    tr = check_trapping(f, U, boundary_samples=args.nodes or 2000, seed=args.seed, raise_on_violation=False)
    st = check_star_shaped(U, seed=args.seed)
    summary.update({"margin": tr.margin, "center_ok": tr.center_ok, "line_ok": tr.line_ok,
                    "preimage_violations": tr.preimage_violations, "trapping_ok": tr.ok,
                    "star_shaped": st.passed, "star_violations": st.violations, "rays": st.rays,
                    "star_witness": st.witness})
    rows = []
    if not tr.ok and tr.witness is not None:
        rows.append(["trapping"] + [repr(float(v)) for z in tr.witness for v in (z.real, z.imag)])
    if st.witness is not None:
        rows.append(["star_base"] + [repr(float(v)) for z in st.witness["base"] for v in (z.real, z.imag)])
        rows.append(["star_direction"] + [repr(float(v)) for z in st.witness["direction"] for v in (z.real, z.imag)])
    write_csv(_stem(args, "check_region_witness"), ["kind", "re0", "im0", "re1", "im1", "re2", "im2"], rows)
    failures = []
    if not tr.ok:
        failures.append(("attractor", "TrappingViolated", f"margin={tr.margin:.6g}"))
    if not st.passed:
        w = st.witness
        failures.append(("attractor", "StarShapeFailed",
                         f"violations={st.violations}/{st.rays} exit_t={w['exit_t']} reentry_t={w['reentry_t']}"))
    if not (tr.center_ok and tr.line_ok):
        failures.append(("attractor", "RegionPlacement", f"center_ok={tr.center_ok} line_ok={tr.line_ok}"))
    if failures:
        detail = "; ".join([failures[0][2]] + [f"{c} {d}" for _, c, d in failures[1:]])
        raise HypothesisFailure(failures[0][0], failures[0][1], detail, summary)
    return summary


def cmd_green(args):
    from .green import GreenField
    from .plotting import scatter, write_csv
    from .projective import random_points

    f, U, h = _load(args)
    n = 20 if args.n is None else args.n
    gf = GreenField(f, n)
    X = random_points(f.k, args.nodes or 2000, np.random.default_rng(args.seed))
    g = gf.values(X)
    bound = gf.bound()
    rows = [[repr(float(v)) for z in x for v in (z.real, z.imag)] + [repr(float(gv))] for x, gv in zip(X, g)]
    write_csv(_stem(args, "green"), ["re0", "im0", "re1", "im1", "re2", "im2", "g"], rows)
    scatter(_stem(args, "green_plot"), X, g, f"Green function g_{n}")
    return {"n": n, "tail_constant": gf.tail_constant(), "bound": bound, "g_min": float(g.min()),
            "g_max": float(g.max()), "points": int(X.shape[0]), "input_hash": h, "config": _config(args)}


def cmd_mu(args):
    from .green import mu_sample
    from .plotting import scatter

    f, U, h = _load(args)
    n = 10 if args.n is None else args.n
    m = mu_sample(f, n, args.nodes or 1000, seed=args.seed, threads=args.threads)
    with open(_stem(args, "mu") + ".csv", "w", encoding="utf-8") as fh:
        fh.write(m.to_csv())
    scatter(_stem(args, "mu_plot"), m.points, m.weights, f"mu sample, n = {n}")
    return {"n": n, "atoms": len(m), "min_u": float(U.u(m.points).min()), "input_hash": h,
            "config": _config(args)}


def _forms():
    from .attractor import default_forms

    return default_forms(2)


def cmd_tau(args):
    from .attractor import attracting_current
    from .plotting import scatter, series
    from .quadrature import RefinePolicy

    f, U, h = _load(args)
    n = 8 if args.n is None else args.n
    L = _base_line(U, args.seed)
    pol = RefinePolicy(quad_tol=args.tol or 1e-4, max_nodes=args.nodes or 10_000_000)
    S, diag = attracting_current(f, U, L, n, _forms(), pol, n_min=max(0, n - 4))
    S.write(_stem(args, "tau_current"), seed=args.seed, map_hash=f.hash)
    P = np.array(diag.pairings)
    series(_stem(args, "tau_pairings"), diag.ns, [P[:, j] for j in range(P.shape[1])], diag.form_names,
           "pairings of tau_n")
    scatter(_stem(args, "tau_plot"), S.points, S.weights * S.mass_scale, f"tau_{n}")
    return {"n": n, "mass": S.mass(), "nodes": len(S), "pairings": diag.pairings, "cauchy_gaps": diag.cauchy_gaps,
            "limit_estimates": diag.limit_estimates, "support_u_max": diag.support_u_max,
            "warnings": diag.warnings, "input_hash": h, "config": _config(args)}


def cmd_nu(args):
    from .equilibrium import hermitian_observables, invariance_gap, max_atom, nu_exact_small, nu_sample
    from .plotting import scatter

    f, U, h = _load(args)
    L = _base_line(U, args.seed)
    if args.mode == "exact":
        n = 3 if args.n is None else args.n
        nu = nu_exact_small(f, U, L, n, lines=args.nodes or 32, seed=args.seed)
    else:
        n = 8 if args.n is None else args.n
        nu = nu_sample(f, U, L, n, nodes=args.nodes or 2_000_000, tol=args.tol or 1e-4)
    nu.write(_stem(args, "nu_measure"))
    scatter(_stem(args, "nu_plot"), nu.points, nu.weights, f"nu_{n} ({nu.mode})")
    obs = hermitian_observables()
    return {"n": n, "mode": nu.mode, "raw_mass": nu.raw_mass, "atoms": len(nu.weights), "max_atom": max_atom(nu),
            "invariance_gap": invariance_gap(nu, f, obs), "max_u": float(U.u(nu.points).max()),
            "pairings": {o.__name__: nu.pair(o) for o in obs}, "input_hash": h, "config": _config(args)}


def cmd_entropy(args):
    from .entropy import entropy_estimate, fiber_depth, separation_run, volume_growth
    from .homotopy import preimages
    from .plotting import series, write_csv
    from .projective import random_points

    f, U, h = _load(args)
    nmax = 6 if args.n is None else args.n
    ns = list(range(1, nmax + 1))
    eps = args.eps or [0.02, 0.05]
    N = args.nodes or 2000
    rng = np.random.default_rng(args.seed)
    cloud_u = U.sample_interior(N, rng)
    runs_u = [separation_run(f, cloud_u, ns, e) for e in eps]
    # a separated subset of any fiber is separated in P^2, and fibers carry the entropy
    cloud_g, _ = preimages(f, random_points(f.k, 1, rng)[0], fiber_depth(f, N))
    eps_g = [0.5, 0.7]
    runs_g = [separation_run(f, cloud_g, ns, e) for e in eps_g]
    rows = [["U", r.eps, n, c] for r in runs_u for n, c in zip(r.ns, r.counts)]
    rows += [["P2", r.eps, n, c] for r in runs_g for n, c in zip(r.ns, r.counts)]
    write_csv(_stem(args, "entropy_counts"), ["cloud", "eps", "n", "count"], rows)
    vu = volume_growth(f, U, ns, mc_points=N, seed=args.seed)
    vg = volume_growth(f, None, ns, mc_points=N, seed=args.seed)
    series(_stem(args, "entropy_volume"), ns, [vu.volumes, vg.volumes], ["U", "P2"],
           "graph volume", ylabel="volume", logy=True)
    est_u, per_u = entropy_estimate(runs_u)
    est_g, per_g = entropy_estimate(runs_g)
    return {"n_values": ns, "eps": eps, "eps_P2": eps_g, "cloud_size": N, "cloud_size_P2": int(cloud_g.shape[0]), "estimate_U": est_u, "estimate_P2": est_g,
            "per_eps_U": {str(k): v for k, v in per_u.items()}, "per_eps_P2": {str(k): v for k, v in per_g.items()},
            "volume_rate_U": vu.rate, "volume_rate_P2": vg.rate, "log_d": float(np.log(f.d)),
            "input_hash": h, "config": _config(args)}


def cmd_mixing(args):
    from .currents import bump
    from .equilibrium import envelope, mixing_correlation, nu_sample
    from .plotting import series

    f, U, h = _load(args)
    n = 8 if args.n is None else args.n
    nu = nu_sample(f, U, _base_line(U, args.seed), n, nodes=args.nodes or 2_000_000, tol=args.tol or 1e-3)
    phi = bump(np.array([1, np.exp(0.4j), 0]), 0.5)
    ns = list(range(0, 11))
    cov = mixing_correlation(nu, f, phi, phi, ns)
    prod = mixing_correlation(nu, f, phi, phi, ns, centering="product")
    series(_stem(args, "mixing"), ns, [cov, prod], ["covariance", "product"], "correlations C_n")
    return {"n": n, "correlations": cov, "product_correlations": prod, "envelope": envelope(cov[1:]),
            "input_hash": h, "config": _config(args)}


def cmd_counterexample(args):
    from .attractor import counterexample_run
    from .plotting import write_csv
    from .quadrature import RefinePolicy

    n = 6 if args.n is None else args.n
    rep = counterexample_run(d=args.d, n=n, seed=args.seed, policy=RefinePolicy(quad_tol=args.tol or 1e-4))
    P = rep["pairings"]
    rows = [[i, r] + [repr(float(v)) for v in P[i, r]] for i in range(P.shape[0]) for r in range(P.shape[1])]
    write_csv(_stem(args, "counterexample"), ["cluster", "line", "w0", "w1", "w2"], rows)
    write_csv(_stem(args, "counterexample_centroids"), ["cluster", "w0", "w1", "w2"],
              [[i] + [repr(float(v)) for v in c] for i, c in enumerate(rep["centroids"])])
    st = rep["star_shape"]
    return {"d": args.d, "n": n, "centroids": rep["centroids"], "within_gap": rep["within_gap"],
            "between_gap": rep["between_gap"], "ratio": rep["ratio"], "star_shaped": st.passed,
            "star_witness": st.witness, "control_star_shaped": rep["control_star_shape"].passed,
            "control_spread": rep["control_spread"], "config": _config(args)}


def cmd_potentials(args):
    from .attractor import nearby_lines, potential_comparison

    f, U, h = _load(args)
    n = 3 if args.n is None else args.n
    L1, L2 = nearby_lines(U.projection.target, 2, 0.05, args.seed)
    rep = potential_comparison(f, U, L1, L2, n, grid=args.nodes or 10_000, seed=args.seed, tol=args.tol or 1e-2)
    from .plotting import write_csv

    write_csv(_stem(args, "potentials"), ["quantity", "value"],
              [[k, repr(float(v))] for k, v in rep.items() if isinstance(v, float)])
    return dict(rep, input_hash=h, config=_config(args))


def cmd_preimage_stat(args):
    from .attractor import lebesgue_preimage_stat
    from .plotting import series

    f, U, h = _load(args)
    nmax = 5 if args.n is None else args.n
    rep = lebesgue_preimage_stat(f, U, list(range(1, nmax + 1)), args.nodes or 20, seed=args.seed)
    series(_stem(args, "preimage_stat"), rep["n"], [rep["statistic"]], ["fraction in U"],
           "#(f^-n(a) in U) / d^n")
    return {"n": rep["n"], "statistic": rep["statistic"], "fiber_totals_ok":
            bool(np.all(rep["fiber_totals"] == (f.d ** f.k) ** np.array(rep["n"]))),
            "strictly_decreasing": rep["strictly_decreasing"], "vacuous": rep["vacuous"],
            "input_hash": h, "config": _config(args)}


def cmd_report(args):
    from .plotting import write_csv

    rows, runs = [], {}
    for path in sorted(glob.glob(os.path.join(args.out, "*.json"))):
        name = os.path.splitext(os.path.basename(path))[0]
        if name == "report":
            continue
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError):
            continue
        if not isinstance(data, dict):
            continue
        runs[name] = data
        for k in sorted(data):
            v = data[k]
            if isinstance(v, (int, float, bool)) and not isinstance(v, str):
                rows.append([name, k, repr(v)])
    write_csv(_stem(args, "report"), ["run", "quantity", "value"], rows)
    return {"runs": sorted(runs), "count": len(runs)}


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        from .parallel import resolve_threads

        args.threads = resolve_threads(args.threads)
    except Exception:  # noqa: BLE001 - thread resolution never blocks a run
        pass
    os.makedirs(args.out, exist_ok=True)
    name = args.command.replace("-", "_")
    try:
        summary = HANDLERS[args.command](args)
    except HypothesisFailure as exc:
        _write_summary(args, name, dict(exc.summary, status="hypothesis_failed"))
        sys.stderr.write(f"ERROR {exc.module} {exc.code} {exc}\n")
        return EXIT_HYPOTHESIS
    except TrappingViolated as exc:
        sys.stderr.write(f"ERROR {exc.module} {exc.code} {exc}\n")
        return EXIT_HYPOTHESIS
    except (MapFormatError, RegionFormatError, FileNotFoundError) as exc:
        module, code = getattr(exc, "module", "cli"), getattr(exc, "code", type(exc).__name__)
        sys.stderr.write(f"ERROR {module} {code} {exc}\n")
        return EXIT_INPUT
    except PluridynError as exc:
        sys.stderr.write(f"ERROR {exc.module} {exc.code} {exc}\n")
        return EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"ERROR numeric {type(exc).__name__} {exc}\n")
        return EXIT_NUMERIC
    _write_summary(args, name, dict(summary, status="ok"))
    print(f"{args.command}: ok ({os.path.join(args.out, name + '.json')})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
