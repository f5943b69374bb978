"""Command-line interface: ``polyfact <subcommand> ...``.

Exit codes: 0 success (converged / certificate holds), 1 error,
2 factorization stopped at ``--max-iters`` without converging,
3 certificate does not hold.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_CERT_FAILS = 0, 1, 2, 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _polytope(args, dim=None):
    from .io import load_polytope
    return load_polytope(args.polytope, dim if dim is not None else args.dim)


def cmd_factorize(args) -> int:
    from .factorizer import FactorizationProblem, factorize, recovery_preset
    from .io import read_matrix, write_matrix

    Y = read_matrix(args.input)
    p = _polytope(args, args.rank)
    kw = recovery_preset() if args.preset == "recovery" else {}
    explicit = {"lam": args.lam, "tau": args.tau, "step_scale": args.step_scale,
                "max_iters": args.max_iters, "rel_tol": args.rel_tol, "init": args.init,
                "lam_start": args.lam_start, "lam_decay": args.lam_decay,
                "restarts": args.restarts, "sweeps": args.sweeps}
    kw.update({k: v for k, v in explicit.items() if v is not None})
    if args.whiten:
        kw["whiten"] = True
    if args.dykstra:
        kw["dykstra"] = True
    prob = FactorizationProblem(Y, p, rank=args.rank, seed=args.seed,
                                raw_paper_step=args.raw_paper_step, **kw)
    res = factorize(prob)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "H.csv"), res.H)
    write_matrix(os.path.join(args.out, "S.csv"), res.S)
    with open(os.path.join(args.out, "trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective"])
        for i, v in enumerate(res.objective_trace, 1):
            w.writerow([i, repr(v)])
    summary = {"iterations": res.iterations, "converged": res.converged,
               "final_objective": res.objective_trace[-1], "seed": args.seed,
               "rank": prob.rank, "polytope": str(args.polytope),
               "settings": {k: getattr(prob, k) for k in
                            ("lam", "tau", "step_scale", "max_iters", "rel_tol", "init",
                             "whiten", "lam_start", "lam_decay", "restarts", "sweeps",
                             "dykstra", "raw_paper_step")},
               "extra": res.extra}
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    print(f"{res.iterations} iterations, converged={res.converged}, "
          f"objective={res.objective_trace[-1]:.6g}; wrote {args.out}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_experiment(args) -> int:
    from .experiment import ExperimentConfig, run_experiment

    with open(args.config) as fh:
        d = json.load(fh)
    if args.realizations is not None:
        d["realizations"] = args.realizations
    if args.base_seed is not None:
        d["base_seed"] = args.base_seed
    if args.preset is not None:
        d.setdefault("solver", {})["preset"] = args.preset
    if args.max_iters is not None:
        d.setdefault("solver", {})["max_iters"] = args.max_iters
    cfg = ExperimentConfig.from_dict(d)

    def progress(rec):
        if not args.quiet:
            print(f"cell {rec.cell} rep {rec.realization}: SIR {rec.mean_sir_db:.2f} dB "
                  f"({rec.iterations} it){' ' + rec.error if rec.error else ''}", file=sys.stderr)

    records = run_experiment(cfg, args.out, workers=args.workers, progress=progress)
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} rows ({failed} failed) written to {args.out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    from .datagen import (InflationParams, generate_inflated_mvie, generate_polar_domain,
                          make_ground_truth, pad_with_interior)
    from .io import polytope_to_dict

    p = _polytope(args)
    data_ss, truth_ss = np.random.SeedSequence(args.seed).spawn(2)
    rng = np.random.default_rng(data_ss)
    if args.generator == "polar_domain":
        S = generate_polar_domain(p, args.L, seed=rng)
        if args.N is not None:
            S = pad_with_interior(S, args.N, seed=rng)
    else:
        if args.rho is None or args.N is None:
            raise ValueError("inflated_mvie needs --rho and --N")
        S = generate_inflated_mvie(p, InflationParams(args.rho, args.N), seed=rng)
    gt = make_ground_truth(p, S, args.M, args.snr, seed=int(truth_ss.generate_state(1)[0]),
                           polytope_spec=polytope_to_dict(p))
    gt.seed = args.seed
    gt.save(args.out)
    print(f"wrote {S.shape[1]} samples (r={p.dim}, M={args.M}) to {args.out}")
    return EXIT_OK


def cmd_mvie(args) -> int:
    from .mvie import mvie_closed_form, mvie_solve, verify_john

    p = _polytope(args)
    if args.numeric or p.special is None:
        e = mvie_solve(p.halfspaces, tol=args.tol)
        source = "numeric"
    else:
        e = mvie_closed_form(p.special, p.dim)
        source = "closed_form"
    john = verify_john(e, p.halfspaces)
    _emit({"C": e.C.tolist(), "g": e.g.tolist(), "logdet": e.logdet(), "source": source,
           "john": {"contact_count": john.contact_count,
                    "is_plausible_mvie": john.is_plausible_mvie,
                    "residual": john.residual}})
    return EXIT_OK if john.is_plausible_mvie else EXIT_CERT_FAILS


def cmd_check_identifiable(args) -> int:
    from .geometry import check_identifiable

    rep = check_identifiable(_polytope(args))
    _emit(rep.to_dict())
    return EXIT_OK if rep.identifiable else EXIT_CERT_FAILS


def cmd_check_scattered(args) -> int:
    from .geometry import check_scattered
    from .io import read_matrix

    p = _polytope(args)
    S = read_matrix(args.samples)
    if S.shape[0] != p.dim and S.shape[1] == p.dim:
        S = S.T
    rep = check_scattered(S, p, tol=args.tol)
    _emit(rep.to_dict())
    return EXIT_OK if (rep.ss1_holds and rep.ss2_holds) else EXIT_CERT_FAILS


def _add_polytope(sp, required=True):
    sp.add_argument("--polytope", required=required,
                    help="binf, b1, binfplus, b1plus, pex, or a polytope JSON file")
    sp.add_argument("--dim", type=int, help="dimension for the named special polytopes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyfact", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factorize", help="factor one data matrix")
    f.add_argument("--input", required=True, help="Y as .csv or .f64")
    _add_polytope(f)
    f.add_argument("--rank", type=int, help="latent dimension r (defaults to the polytope's)")
    f.add_argument("--lambda", dest="lam", type=float)
    f.add_argument("--tau", type=float)
    f.add_argument("--step-scale", type=float)
    f.add_argument("--max-iters", type=int)
    f.add_argument("--rel-tol", type=float)
    f.add_argument("--seed", type=int)
    f.add_argument("--init", choices=("random", "whitened"))
    f.add_argument("--whiten", action="store_true", help="iterate on whitened data")
    f.add_argument("--lambda-start", dest="lam_start", type=float,
                   help="anneal lambda from this value down to --lambda")
    f.add_argument("--lambda-decay", dest="lam_decay", type=float)
    f.add_argument("--restarts", type=int)
    f.add_argument("--sweeps", type=int, help="cyclic projection passes (feature specs)")
    f.add_argument("--dykstra", action="store_true",
                   help="exact (Dykstra) sweeps for feature-spec polytopes")
    f.add_argument("--preset", choices=("recovery",),
                   help="start from the reliable-recovery settings")
    f.add_argument("--raw-paper-step", action="store_true",
                   help="use the S-step exactly as printed (no 1/L, minus sign)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_factorize)

    e = sub.add_parser("experiment", help="run a seeded sweep from a JSON config")
    e.add_argument("config")
    e.add_argument("--out", required=True)
    e.add_argument("--realizations", type=int)
    e.add_argument("--base-seed", type=int)
    e.add_argument("--max-iters", type=int)
    e.add_argument("--preset", choices=("recovery",))
    e.add_argument("--workers", type=int, help="defaults to $POLYFACT_THREADS or 1")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("generate", help="write a synthetic ground truth directory")
    _add_polytope(g)
    g.add_argument("--generator", choices=("polar_domain", "inflated_mvie"),
                   default="polar_domain")
    g.add_argument("--L", type=int, default=30)
    g.add_argument("--rho", type=float)
    g.add_argument("--N", type=int)
    g.add_argument("--M", type=int, default=4)
    g.add_argument("--snr", type=float, help="dB; omit for noiseless")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("mvie", help="maximum volume inscribed ellipsoid")
    _add_polytope(m)
    m.add_argument("--numeric", action="store_true",
                   help="solve numerically even when a closed form exists")
    m.add_argument("--tol", type=float, default=1e-10)
    m.set_defaults(func=cmd_mvie)

    c = sub.add_parser("check-identifiable", help="identifiability certificate")
    _add_polytope(c)
    c.set_defaults(func=cmd_check_identifiable)

    s = sub.add_parser("check-scattered", help="sufficient-scattering certificate")
    _add_polytope(s)
    s.add_argument("--samples", required=True, help="r x N sample matrix file")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_check_scattered)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"polyfact {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # solver aborts and other runtime failures
        print(f"polyfact {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
