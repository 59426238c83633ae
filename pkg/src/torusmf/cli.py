"""Command line front end.

    torusmf <subcommand> --config run.cfg [--beta B] [--grid N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 solver verdict Diverged or
CoercivityFailed (artifacts are still written).
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import alpha_mt, functionals as fn, io
from .config import ConfigError, load_config, read_field, validate
from .envelope import envelope_zero, orthogonality_residual
from .errors import TorusMFError
from .grid import BackgroundForm, GridSpec, dirichlet
from .mean_field import (COERCIVITY_FAILED, DIVERGED, beta_infinity_sweep,
                         solve)
from .measures import klt_measure, lebesgue, from_density

SUBCOMMANDS = ("solve", "envelope", "duality", "alpha", "mt", "sweep-beta-inf", "report")
FAILING_VERDICTS = (DIVERGED, COERCIVITY_FAILED)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def build_parser():
    p = argparse.ArgumentParser(prog="torusmf", description=__doc__.split("\n\n")[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--beta", type=float, help="override solver.beta")
    p.add_argument("--grid", type=int, help="override grid.n_side")
    p.add_argument("--out", help="override output.dir")
    return p


def make_data(cfg):
    """Background form and reference measure described by the config."""
    grid = GridSpec(cfg.n_side)
    kind, _, arg = cfg.form_kind.partition(":")
    if kind == "lebesgue":
        omega = BackgroundForm.lebesgue(grid)
    elif kind == "cosine":
        omega = BackgroundForm.cosine(grid, float(arg))
    else:
        omega = BackgroundForm.from_density(read_field(cfg.resolve(arg), cfg.n_side))
    kind, _, arg = cfg.measure_kind.partition(":")
    if kind == "lebesgue":
        mu0 = lebesgue(grid)
    elif kind == "klt":
        mu0 = klt_measure(cfg.poles, grid)
    else:
        mu0 = from_density(read_field(cfg.resolve(arg), cfg.n_side))
    return omega, mu0


def solver_params(cfg, beta=None):
    return fn.SolverParams(beta=cfg.beta if beta is None else beta,
                           tol_residual=cfg.tol_residual, tol_gap=cfg.tol_gap,
                           max_iter=cfg.max_iter, damping=cfg.damping,
                           method=cfg.method, allow_noncoercive=cfg.allow_noncoercive)


def _functionals(u, mu0, beta, omega):
    if beta == 0:
        E = fn.energy_E(u, omega)
        I = dirichlet(u, u)
        return {"E": E, "I": I, "J": 0.5 * I, "D": fn.entropy_D(fn.ma_measure(u, omega), mu0),
                "F": np.nan, "G": np.nan, "K": np.nan, "L": np.nan}
    rep = fn.functional_report(u, mu0, beta, omega)
    return {k: v for k, v in rep.as_dict().items() if k != "beta"}


def _solve_summary(cfg, res, omega, mu0):
    out = {"verdict": res.verdict, "beta": res.beta, "iterations": res.iterations,
           "residual_linf": res.residual_linf, "gap": res.gap, "gauge": res.gauge}
    if res.verdict != COERCIVITY_FAILED and res.mu_star is not None:
        out.update(_functionals(res.u_star, mu0, res.beta, omega))
    if res.coercivity is not None:
        c = res.coercivity
        out["alpha_hat"] = c.alpha_hat
        out["coercivity"] = {"passed": c.passed, "gamma": c.gamma,
                             "threshold": c.threshold, "max_value": c.max_value,
                             "witness": c.witness}
    return out


def _history_csv(path, res):
    io.write_csv(path, ["iter", "residual", "F", "G", "gap"], res.history)


def cmd_solve(cfg, out):
    omega, mu0 = make_data(cfg)
    res = solve(cfg.beta, mu0, omega, solver_params(cfg))
    _history_csv(out / "history.csv", res)
    if cfg.heatmaps:
        io.write_pgm(out / "u.pgm", res.u_star)
    return _solve_summary(cfg, res, omega, mu0), "solution.json", res.verdict


def cmd_envelope(cfg, out):
    omega, _ = make_data(cfg)
    env = envelope_zero(omega)
    zero = np.zeros(omega.rho.shape)
    summary = {"lcp_residual": env.lcp_residual, "iterations": env.iterations,
               "orthogonality_residual": orthogonality_residual(zero, omega, result=env),
               "contact_fraction": float(np.mean(env.contact_set)),
               "sup_P0": float(np.max(env.Pu)), "inf_P0": float(np.min(env.Pu)),
               "E_P0": fn.energy_E(env.Pu, omega)}
    if cfg.heatmaps:
        io.write_pgm(out / "P0.pgm", env.Pu)
        io.write_pgm(out / "contact.pgm", env.contact_set.astype(float))
    return summary, "envelope.json", None


def cmd_duality(cfg, out):
    omega, mu0 = make_data(cfg)
    beta = cfg.beta
    if beta == 0:
        raise ConfigError("duality needs a nonzero solver.beta")
    res = solve(beta, mu0, omega, solver_params(cfg))
    summary = _solve_summary(cfg, res, omega, mu0)
    _history_csv(out / "history.csv", res)
    if res.verdict not in FAILING_VERDICTS:
        G_star = fn.ding_G(res.u_star, mu0, beta, omega)
        F_star = fn.free_energy_F(res.mu_star, mu0, beta, omega)
        rows = []
        for name, u in alpha_mt.psh_probes(omega, count=50, seed=cfg.seed):
            F = fn.free_energy_F(fn.ma_measure(u, omega), mu0, beta, omega)
            G = fn.ding_G(u, mu0, beta, omega)
            rows.append((name, F, G))
        tol = cfg.tol_gap
        if beta < 0:
            ok = all(F <= G + tol and G <= G_star + tol for _, F, G in rows)
        else:
            ok = all(G <= G_star + tol and F_star <= F + tol for _, F, G in rows)
        summary.update({"F_star": F_star, "G_star": G_star, "sandwich_holds": ok,
                        "probes": len(rows)})
        io.write_csv(out / "probes.csv", ["probe", "F", "G"], rows)
    return summary, "duality.json", res.verdict


def cmd_alpha(cfg, out):
    omega, mu0 = make_data(cfg)
    rep = alpha_mt.alpha_estimate(mu0, omega)
    d_hat = alpha_mt.frostman_exponent(mu0)
    io.write_csv(out / "alpha_trace.csv", ["t", "level", "partial_integral", "verdict"],
                 rep.trace_rows())
    summary = {"alpha_hat": rep.alpha_hat, "witness": rep.witness,
               "inconclusive": rep.inconclusive, "probe_family": rep.probe_family,
               "grid_levels": rep.grid_levels,
               "samples": [[t, v] for t, v, _ in rep.t_samples],
               "frostman_d": d_hat, "frostman_lower_bound": d_hat / 2}
    return summary, "alpha.json", None


def cmd_mt(cfg, out):
    omega, mu0 = make_data(cfg)
    rep = alpha_mt.mt_constant_fit(mu0, omega, seed=cfg.seed)
    summary = {"a_fit": rep.a_fit, "C_fit": rep.C_fit, "witness": rep.witness,
               "gamma_max": rep.gamma_max, "alpha_hat": rep.alpha.alpha_hat,
               "frostman_d": rep.frostman_d,
               "frostman_coefficient": rep.frostman_coefficient}
    return summary, "mt.json", None


def cmd_sweep(cfg, out):
    omega, mu0 = make_data(cfg)
    env = envelope_zero(omega)
    rows, _ = beta_infinity_sweep(cfg.betas, mu0, omega, envelope=env)
    io.write_csv(out / "sweep.csv", ["beta", "l1_dist", "linf_dist", "sup_u"],
                 [(r.beta, r.l1_dist, r.linf_dist, r.sup_u) for r in rows])
    l1 = [r.l1_dist for r in rows]
    summary = {"rows": len(rows), "verdicts": [r.verdict for r in rows],
               "l1_strictly_decreasing": all(b < a for a, b in zip(l1, l1[1:])),
               "l1_ratio_last_first": l1[-1] / l1[0] if l1[0] > 0 else np.nan}
    if cfg.heatmaps:
        io.write_pgm(out / "P0.pgm", env.Pu)
    return summary, "sweep.json", None


def cmd_report(cfg, out):
    omega, mu0 = make_data(cfg)
    res = solve(cfg.beta, mu0, omega, solver_params(cfg))
    summary = _solve_summary(cfg, res, omega, mu0)
    checks = {}
    if res.verdict not in FAILING_VERDICTS:
        u = res.u_star
        I = dirichlet(u, u)
        J = 0.5 * I
        ma = fn.ma_measure(u, omega)
        un = u - omega.grid.integrate(u * omega.rho)
        checks["I_equals_2J"] = abs(I - 2 * J) <= 1e-9 * (1 + I)
        checks["energy_of_MA_equals_J"] = abs(fn.measure_energy(ma, omega) - J) <= 1e-9
        checks["pairing_identity"] = abs(-float(np.sum(un * ma.weights))
                                         - 2 * fn.measure_energy(ma, omega)) <= 1e-9
        checks["residual_certified"] = res.residual_linf <= cfg.tol_residual
        checks["gap_certified"] = bool(res.gap <= cfg.tol_gap)
    checks["converged"] = res.verdict == "Converged"
    env = envelope_zero(omega)
    checks["envelope_complementarity"] = env.lcp_residual <= 1e-8
    checks["envelope_orthogonality"] = orthogonality_residual(
        np.zeros(omega.rho.shape), omega, result=env) <= 1e-7
    summary["checks"] = checks
    return summary, "report.json", res.verdict


HANDLERS = {"solve": cmd_solve, "envelope": cmd_envelope, "duality": cmd_duality,
            "alpha": cmd_alpha, "mt": cmd_mt, "sweep-beta-inf": cmd_sweep,
            "report": cmd_report}


def run(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.beta is not None:
            cfg.beta = args.beta
        if args.grid is not None:
            cfg.n_side = args.grid
        if args.out is not None:
            cfg.out_dir = args.out
        validate(cfg, Path(args.config))
        out = Path(cfg.out_dir)
        if not out.is_absolute() and args.out is None:
            out = cfg.base_dir / out
        out.mkdir(parents=True, exist_ok=True)
        try:
            make_data(cfg)
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc), None, args.config) from None
    except ConfigError as exc:
        print(f"error: {exc.render()}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        summary, name, verdict = HANDLERS[args.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc.render()}", file=sys.stderr)
        return EXIT_CONFIG
    except TorusMFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    elapsed = (time.perf_counter() - start) * 1000.0
    payload = {"subcommand": args.subcommand, "config": cfg.echo()}
    payload.update(summary)
    payload["wall_time_ms"] = elapsed if cfg.timing else None
    io.write_json(out / name, payload)
    return EXIT_SOLVER if verdict in FAILING_VERDICTS else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
