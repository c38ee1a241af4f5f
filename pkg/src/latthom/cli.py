"""Command-line entry point ``latthom``.

Exit codes: 0 success, 1 a check or expected window failed, 2 usage error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .corrector import solve_modified_corrector, unit_direction
from .environment import ConductivityLaw, StreamKey, sample_environment
from .estimators import estimate_AL_periodic, estimate_AT, estimate_ATL
from .experiments import IdentityFailure, MissingReference, StudyManifest, emit_report, run_study
from .fitting import DegenerateData
from .green import decay_profile, green_function
from .lattice import SizingError, TorusLattice, write_field
from .solver import SolverError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _direction(text: str, d: int) -> np.ndarray:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        return unit_direction(int(parts[0]), d)
    if len(parts) != d:
        raise ValueError(f"direction needs {d} components, got {len(parts)}")
    return unit_direction(parts)


def _environment(args, replica: int = 0) -> np.ndarray:
    law = ConductivityLaw.parse(args.law)
    return sample_environment(law, TorusLattice(args.dim, args.side), StreamKey(args.seed, replica))


def _add_env_args(p):
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--law", default="twopoint:0.25,4,0.5")
    p.add_argument("--seed", type=int, default=0)


def cmd_study(args) -> int:
    m = StudyManifest.load(args.config)
    if m.study != args.kind:
        raise ValueError(f"manifest describes a {m.study!r} study, not {args.kind!r}")
    if args.out:
        m.output_dir = args.out
    result = run_study(m)
    paths = emit_report(result, m.output_dir)
    fit = result.fit
    print(f"{m.study} d={m.d}: slope {fit.slope:.4f} (residual {fit.residual:.3g})"
          f"{' FLAGGED: standard error above 20% of a point' if fit.flagged else ''}")
    for key, path in paths.items():
        print(f"  {key}: {path}")
    if fit.flagged:
        return EXIT_FAIL
    if m.expected_slope is not None and not fit.in_window(*m.expected_slope):
        print(f"slope outside expected window {m.expected_slope}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verification as V

    ok = True
    if args.what == "identities":
        for r in V.identity_suite(args.seed):
            ok &= r.passed
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: rel {r.rel_error:.2e}")
    elif args.what == "covariance":
        for c in V.covariance_suite():
            ok &= c.passed and c.stable
            print(f"{'PASS' if c.passed and c.stable else 'FAIL'} cov({c.name}) = {c.covariance:.4e}"
                  f" <= bound {c.bound_coarse:.4e} (grid 5) / {c.bound_fine:.4e} (grid 9)")
    elif args.what in ("green", "harnack"):
        for d, T, n in ((2, 1024, 256), (3, 64, 64)):
            g = V.green_study(d, T, n, samples=args.samples, seed=args.seed)
            slope = g.decay_slope if args.what == "green" else g.harnack_slope
            good = abs(slope) <= 0.2
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} {args.what} d={d} T={T} n={n}: pooled slope {slope:+.3f}")
    elif args.what == "convolution":
        targets = {2: 1.0, 3: 0.5}
        for d, res in V.convolution_suite().items():
            good = abs(res.slope - targets[d]) <= 0.15
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} convolution d={d} T={list(res.T)}: slope {res.slope:.3f}"
                  f" (target {targets[d]})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_estimate(args) -> int:
    for r in range(args.replicas):
        a = _environment(args, r)
        xi = _direction(args.xi, args.dim)
        if args.kind == "at":
            rec = estimate_AT(a, args.T, xi, seed=args.seed)
        elif args.kind == "atl":
            if args.L is None:
                raise ValueError("--L is required for --kind atl")
            rec = estimate_ATL(a, args.T, args.L, xi, seed=args.seed)
        else:
            rec = estimate_AL_periodic(a, xi, seed=args.seed)
        print(rec.to_json())
    return EXIT_OK


def cmd_corrector(args) -> int:
    a = _environment(args)
    sol = solve_modified_corrector(a, args.T, _direction(args.xi, args.dim))
    if args.out:
        write_field(args.out, sol.phi, "node")
    print(json.dumps({"T": args.T, "iterations": sol.report.iterations,
                      "relative_residual": sol.report.final_relative_residual,
                      "out": args.out}))
    return EXIT_OK


def cmd_green(args) -> int:
    a = _environment(args)
    pole = _ints(args.pole) if args.pole else (0,) * args.dim
    G = green_function(a, args.T, pole)
    prof = decay_profile(G)
    if args.profile_out:
        prof.to_csv(args.profile_out)
    print(json.dumps({"T": args.T, "pole": list(G.pole), "mass_defect": G.mass_defect(),
                      "annuli": int(prof.rows.shape[0]), "profile_out": args.profile_out}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latthom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("study", help="run a Monte Carlo scaling study from a JSON manifest")
    p.add_argument("kind", choices=("systematic", "random", "corrector", "full"))
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the manifest's output directory")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("what", choices=("identities", "covariance", "green", "harnack", "convolution"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", help="print JSON estimate records")
    p.add_argument("--kind", choices=("at", "atl", "alhash"), required=True)
    _add_env_args(p)
    p.add_argument("--T", type=float, default=np.inf)
    p.add_argument("--L", type=int)
    p.add_argument("--xi", default="0")
    p.add_argument("--replicas", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("corrector", help="solve for the modified corrector")
    _add_env_args(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--xi", default="0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_corrector)

    p = sub.add_parser("green", help="Green function and its decay profile")
    _add_env_args(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--pole")
    p.add_argument("--profile-out")
    p.set_defaults(func=cmd_green)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IdentityFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    except DegenerateData as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (MissingReference, SizingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
