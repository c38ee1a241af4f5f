"""Monte Carlo scaling studies driven by manifests.

Runs small versions of the four study kinds, prints the fitted slopes and
writes CSV, manifest and fit files under a scratch directory. The full-size
configurations used for acceptance live in demos/manifests/. Run:

    python3 demos/scaling_studies.py [output_dir]
"""
import sys
import tempfile
from pathlib import Path

from latthom.experiments import StudyManifest, emit_report, read_csv, run_study

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="latthom-"))
law = "twopoint:0.25,4,0.5"

studies = [
    # same-sample dyadic differences |A_2T - A_T| along a T ladder
    StudyManifest("systematic", 2, law, replicas=30, T_ladder=[8, 16, 32, 64]),
    # standard deviation of the masked estimator with T = L^2
    StudyManifest("random", 2, law, replicas=100, L_ladder=[2, 4, 8]),
    # corrector distance to a reference at four times the largest T
    StudyManifest("corrector", 2, law, replicas=30, T_ladder=[4, 8, 16, 32]),
    # root-mean-square error against the exact value 1 of the self-dual law
    StudyManifest("full", 2, law, replicas=30, L_ladder=[2, 4, 8], reference=1.0),
]

for m in studies:
    result = run_study(m)
    paths = emit_report(result, out)
    fit = result.fit
    print(f"{m.study:10s} d={m.d}: slope {fit.slope:+.3f}  residual {fit.residual:.3f}"
          f"{'  (flagged)' if fit.flagged else ''}")
    table = read_csv(paths["csv"])
    for x, v, s in zip(table["x"], table["value"], table["stderr"]):
        print(f"    x = {x:6g}  value = {v:.4e} +- {s:.1e}")

print(f"\nreports written to {out}")
print("replay any of them with: latthom study <kind> --config <name>.manifest.json")
