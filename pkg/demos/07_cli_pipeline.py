"""
End-to-end pipeline through the command line
============================================

A miniature ablation on H2 (three ansatze, two sizes, two step counts),
followed by a fit, a frontier and a heat-map grid. The same commands are
available as ``nqs-scaling <verb>``.
"""

import tempfile
from importlib import resources
from pathlib import Path

from nqs_scaling.cli import main, read_results

ham = resources.files("nqs_scaling") / "data" / "h2_sto3g.ham"
work = Path(tempfile.mkdtemp(prefix="nqs-demo-"))
(work / "sweep.ini").write_text(
    f"""[sweep]
hamiltonians = {ham}
architectures = made, transformer, retnet
d_model = 8, 16
made_hidden = 8, 32
phase_hidden = 16
steps = 100, 400
max_unique = 16
seeds = 0

[output]
results = results.csv
"""
)

main(["sweep", "--config", str(work / "sweep.ini"), "--workers", "3"])
rows = read_results(work / "results.csv")
for r in rows:
    print(f"{r['ansatz']:>11} N={float(r['N_k']):6.3f}k T={r['T']:>4} |dE|={float(r['abs_error']):.2e} V={float(r['vscore']):.2e}")

main(["fit", str(work / "results.csv"), "--metric", "abserr", "--steps", "5000", "--out", str(work / "curve.txt")])
main(["frontier", str(work / "curve.txt"), "--budget", "1e9", "--k", "100"])
main(["heatmap", str(work / "results.csv"), "--metric", "vscore"])
main(["exact", str(ham)])
print("outputs in", work)
