"""Command-line front end: one subcommand per experiment."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import harness as H
from .observables import downsample
from .model import exact_gate_count
from .spectrum import butterfly_scan

COMMANDS = ("evolve", "spectrum", "butterfly", "husimi", "web", "sweep-kl", "transition",
            "epsilon-c", "husimi-time")


def _float_list(text: str) -> list:
    """Comma list of floats, or start:stop:count for an inclusive linear grid."""
    if ":" in text:
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with [model] [algorithm] [noise] [run] [output] sections")
    for f in fields(H.ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "symmetrized":
            p.add_argument(flag, dest=f.name, action="store_const", const=True, default=None)
        elif f.name in ("eps", "observables"):
            p.add_argument(flag, dest=f.name, default=None, help="comma-separated list")
        elif f.type.startswith("int"):
            p.add_argument(flag, dest=f.name, type=int, default=None)
        elif f.type.startswith("float"):
            p.add_argument(flag, dest=f.name, type=float, default=None)
        else:
            p.add_argument(flag, dest=f.name, default=None)
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kickedharper",
                                     description="Quantum algorithms for the kicked Harper map")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "evolve": "time series of momentum observables",
        "spectrum": "eigenphases of the chosen method versus the exact step",
        "butterfly": "eigenphases of the exact step for every hbar = 2 pi m / 2^n_r",
        "husimi": "Husimi phase-space grid after t steps",
        "web": "classical ensemble density on the torus",
        "sweep-kl": "mean eigenstate IPR over a (K, L) grid",
        "transition": "K where IPR(t) reaches N_H / 4, per eps",
        "epsilon-c": "eps where the saturation IPR doubles, per n_r",
        "husimi-time": "time for the Husimi error on the web to reach 1/2",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "butterfly":
            p.add_argument("--m-values", type=_int_list, default=None)
        if name == "husimi":
            p.add_argument("--image-size", type=int, default=256)
        if name == "web":
            p.add_argument("--points", type=int, default=10 ** 6)
            p.add_argument("--grid", type=int, default=256)
        if name == "sweep-kl":
            p.add_argument("--K-values", dest="K_values", type=_float_list, default="0:10:11")
            p.add_argument("--L-values", dest="L_values", type=_float_list, default="0:10:11")
        if name == "transition":
            p.add_argument("--K-values", dest="K_values", type=_float_list, required=True)
        if name == "epsilon-c":
            p.add_argument("--n-r-values", dest="n_r_values", type=_int_list, required=True)
            p.add_argument("--regime", choices=("localized", "delocalized"), required=True)
        if name == "husimi-time":
            p.add_argument("--n-r-values", dest="n_r_values", type=_int_list, required=True)
            p.add_argument("--points", type=int, default=10 ** 6)
            p.add_argument("--level", type=float, default=0.5)
    return parser


def config_from_args(args) -> H.ExperimentConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(H.ExperimentConfig)
                 if getattr(args, f.name, None) is not None}
    if args.config:
        return H.load_config(args.config, **overrides)
    return H.ExperimentConfig(**overrides)


def _provenance(cfg, n_g, t, realization=0):
    return {"seed": cfg.seed, "realization": realization, "t": t, "n_g": n_g}


# ------------------------------------------------------------------ commands

def cmd_evolve(cfg, args, man):
    records = H.run_experiment(cfg, args.threads)
    path = H.write_records(records, man.out_dir, cfg.format, "evolve")
    man.add(path, cfg.format, "observables per (eps, realization, t)")
    rows = [{**_provenance(cfg, r.n_g, cfg.t, r.realization), "eps": r.eps, "n": n, "p": float(v)}
            for r in records for n, v in enumerate(r.final_distribution)]
    path = H.write_csv(man.out_dir / "final_distribution.csv",
                       ["seed", "realization", "eps", "t", "n_g", "n", "p"], rows)
    man.add(path, "csv", "momentum distribution at the final time")


def cmd_spectrum(cfg, args, man):
    results = H.spectrum_run(cfg, args.threads)
    n_g = H.Stepper(cfg).n_g
    summary = [{**_provenance(cfg, n_g, 1, r.realization), "eps": r.eps, "delta_E": r.delta_E,
                "offset": r.offset, "unitarity_deviation": r.unitarity_deviation} for r in results]
    path = H.write_csv(man.out_dir / "spectrum_error.csv",
                       ["seed", "realization", "eps", "t", "n_g", "delta_E", "offset",
                        "unitarity_deviation"], summary)
    man.add(path, "csv", "mean eigenphase error in level spacings")
    p = cfg.params()
    rows = [{**_provenance(cfg, n_g, 1, r.realization), "eps": r.eps, "m": p.m,
             "hbar": p.hbar, "K": cfg.K, "L": cfg.L, "index": i, "phase": ph}
            for r in results for i, ph in enumerate(r.phases)]
    header = ["seed", "realization", "eps", "t", "n_g", "m", "hbar", "K", "L", "index", "phase"]
    if cfg.format == "ndjson":
        path = H.write_ndjson(man.out_dir / "eigenphases.ndjson", rows)
    else:
        path = H.write_csv(man.out_dir / "eigenphases.csv", header, rows)
    man.add(path, cfg.format, "eigenphases per (eps, realization)")


def cmd_butterfly(cfg, args, man):
    scan = butterfly_scan(cfg.n_r, cfg.K, cfg.L, args.m_values)
    n_g = exact_gate_count(cfg.n_r, cfg.n_p or cfg.n_r)
    rows = [{**_provenance(cfg, n_g, 1), "m": m, "hbar_over_2pi": h, "E": float(e)}
            for m, h, phases in scan for e in phases]
    path = H.write_csv(man.out_dir / "butterfly.csv",
                       ["seed", "realization", "t", "n_g", "m", "hbar_over_2pi", "E"], rows)
    man.add(path, "csv", "(hbar, E) point cloud")
    bins = 2 * (1 << cfg.n_r)
    img = np.zeros((bins, len(scan)))
    for j, (_, _, phases) in enumerate(scan):
        idx = np.clip(((np.asarray(phases) + np.pi) / (2 * np.pi) * bins).astype(int), 0, bins - 1)
        np.add.at(img[:, j], bins - 1 - idx, 1)
    path = H.write_ppm(man.out_dir / "butterfly.ppm", img, gamma=1.0)
    man.add(path, "ppm", "rows: E from +pi (top) to -pi; columns: m")


def cmd_husimi(cfg, args, man):
    stepper = H.Stepper(cfg)
    eps = cfg.eps[0]
    disorder = stepper.disorder(eps, 0)
    state = stepper.initial_state()
    for _ in range(cfg.t):
        stepper.step(state, disorder)
    h = H.state_husimi(state, stepper.params)
    N = h.shape[0]
    G = min(args.image_size, N)
    while N % G:
        G -= 1
    small = downsample(h, G)
    path = H.write_ppm(man.out_dir / "husimi.ppm", small.T[::-1])
    man.add(path, "ppm", "rows: momentum n (top = largest), columns: theta")
    rows = [{**_provenance(cfg, stepper.n_g, cfg.t), "eps": eps, "theta_bin": i, "n_bin": j,
             "h": float(small[i, j])} for i in range(G) for j in range(G)]
    path = H.write_csv(man.out_dir / "husimi.csv",
                       ["seed", "realization", "eps", "t", "n_g", "theta_bin", "n_bin", "h"], rows)
    man.add(path, "csv", f"Husimi function summed over {N // G}x{N // G} blocks")


def cmd_web(cfg, args, man):
    dens = H.web_density(cfg.K, cfg.L, cfg.cells, cfg.t, args.points, args.grid, cfg.seed)
    path = H.write_ppm(man.out_dir / "web.ppm", dens.T[::-1])
    man.add(path, "ppm", "rows: action I (top = largest), columns: theta")
    G = dens.shape[0]
    rows = [{"seed": cfg.seed, "realization": 0, "t": cfg.t, "n_g": 0, "theta_bin": i, "I_bin": j,
             "density": float(dens[i, j])} for i in range(G) for j in range(G) if dens[i, j] > 0]
    path = H.write_csv(man.out_dir / "web.csv",
                       ["seed", "realization", "t", "n_g", "theta_bin", "I_bin", "density"], rows)
    man.add(path, "csv", "occupied cells of the classical density")


def cmd_sweep(cfg, args, man):
    K, L = args.K_values, args.L_values
    xi = H.sweep_kl(K, L, cfg.n_r, cfg.hbar, args.threads)
    n_g = exact_gate_count(cfg.n_r, cfg.n_p or cfg.n_r)
    rows = [{**_provenance(cfg, n_g, 1), "K": k, "L": l, "ipr": float(xi[i, j])}
            for i, k in enumerate(K) for j, l in enumerate(L)]
    path = H.write_csv(man.out_dir / "sweep_kl.csv",
                       ["seed", "realization", "t", "n_g", "K", "L", "ipr"], rows)
    man.add(path, "csv", "mean eigenstate IPR on the grid")
    path = H.write_ppm(man.out_dir / "sweep_kl.ppm", xi.T[::-1], gamma=1.0)
    man.add(path, "ppm", "rows: L (top = largest), columns: K")


def cmd_transition(cfg, args, man):
    rows, kc_rows, notes = [], [], []
    for eps in cfg.eps:
        res = H.transition_point(cfg, args.K_values, eps, args.threads)
        rows += [{**_provenance(cfg, res.n_g, cfg.t), "eps": eps, "K": k, "ipr": v}
                 for k, v in zip(res.K, res.ipr)]
        kc_rows.append({**_provenance(cfg, res.n_g, cfg.t), "eps": eps, "K_c": res.K_c})
        if res.note:
            notes.append(f"eps={eps:g}: {res.note}")
    path = H.write_csv(man.out_dir / "transition_scan.csv",
                       ["seed", "realization", "t", "n_g", "eps", "K", "ipr"], rows)
    man.add(path, "csv", "realization-averaged IPR(t) versus K")
    path = H.write_csv(man.out_dir / "transition_point.csv",
                       ["seed", "realization", "t", "n_g", "eps", "K_c"], kc_rows)
    man.add(path, "csv", "K_c per eps")
    return notes


def cmd_epsilon_c(cfg, args, man):
    pts = H.epsilon_c_scan(cfg, args.n_r_values, [e for e in cfg.eps if e > 0], args.regime,
                           args.threads)
    rows, scan = [], []
    for pt in pts:
        rows.append({"seed": cfg.seed, "realization": cfg.realizations, "t": cfg.t, "n_g": pt.n_g,
                     "n_r": pt.n_r, "n_q": pt.n_q, "ipr0": pt.ipr0, "eps_c": pt.eps_c,
                     "predicted": pt.predicted})
        scan += [{"seed": cfg.seed, "realization": cfg.realizations, "t": cfg.t, "n_g": pt.n_g,
                  "n_r": pt.n_r, "eps": e, "ipr": v, "ipr_err": s}
                 for e, v, s in zip(pt.eps, pt.ipr, pt.ipr_err)]
    path = H.write_csv(man.out_dir / "epsilon_c.csv",
                       ["seed", "realization", "t", "n_g", "n_r", "n_q", "ipr0", "eps_c",
                        "predicted"], rows)
    man.add(path, "csv", "threshold per n_r; realization column holds the realization count")
    path = H.write_csv(man.out_dir / "saturation_ipr.csv",
                       ["seed", "realization", "t", "n_g", "n_r", "eps", "ipr", "ipr_err"], scan)
    man.add(path, "csv", "realization-averaged saturation IPR")
    return [pt.note for pt in pts if pt.note]


def cmd_husimi_time(cfg, args, man):
    dens = H.web_density(cfg.K, cfg.L, cfg.cells, 1000, args.points, 256, cfg.seed)
    runs = []
    for n_r in args.n_r_values:
        c = cfg.with_(n_r=n_r)
        mask = H.web_mask(dens, 1 << n_r)
        jobs = [(c, e, r, mask, args.level) for e in c.eps if e > 0 for r in range(c.realizations)]
        runs += H.run_jobs(H.husimi_error_run, jobs, args.threads)
    rows = [{"seed": cfg.seed, "realization": r.realization, "t": r.times[-1], "n_g": r.n_g,
             "n_r": r.n_r, "n_q": r.n_q, "eps": r.eps, "t_h": r.t_h} for r in runs]
    path = H.write_csv(man.out_dir / "husimi_time.csv",
                       ["seed", "realization", "t", "n_g", "n_r", "n_q", "eps", "t_h"], rows)
    man.add(path, "csv", "t_h per (n_r, eps, realization); t is the last simulated step")
    notes = [f"n_r={r.n_r} eps={r.eps:g}: level not reached within t={cfg.t}"
             for r in runs if math.isnan(r.t_h)]
    return notes


HANDLERS = {"evolve": cmd_evolve, "spectrum": cmd_spectrum, "butterfly": cmd_butterfly,
            "husimi": cmd_husimi, "web": cmd_web, "sweep-kl": cmd_sweep,
            "transition": cmd_transition, "epsilon-c": cmd_epsilon_c,
            "husimi-time": cmd_husimi_time}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.threads < 1:
            raise H.ConfigError("threads", "must be at least 1")
        man = H.Manifest(Path(cfg.out_dir), args.command, cfg.to_dict())
        notes = HANDLERS[args.command](cfg, args, man) or []
        man.write()
    except (H.ConfigError, H.ScanError, ValueError, OSError) as exc:
        print(f"kickedharper {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if notes:
        print(f"kickedharper {args.command}: error: {'; '.join(notes)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
