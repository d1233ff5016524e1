"""Schedule validation and a small eps sweep compared against the limit model."""

import tempfile

from oukraichnan import harness
from oukraichnan.harness import Rule, Schedule
from oukraichnan.spectra import SpectrumParams

p = SpectrumParams(alpha=1.5, beta=0.5, kappa0=0.1)
eps = (0.4, 0.1, 0.02, 0.005)
for rule in (Rule("power", 1.0, 1.0), Rule("power", 1.0, 2.0)):
    verdict = harness.validate_schedule(p, Schedule("v", eps, rule))
    print(f"ell1 = eps^{rule.exponent:g}: {verdict.describe()}")

cfg = harness.config_from_dict({
    "spectrum": {"ell0": 5.0, "kappa": 0.1, "kappa0": 0.1},
    "schedule": {"epsilons": [0.4, 0.2], "ell1_rule": {"kind": "constant", "coefficient": 0.25}},
    "transport": {"replicas": 200, "chunk": 50, "shells": 8, "dirs_per_shell": 4,
                  "horizon": 0.5, "n_records": 5, "oracle_samples": 2000},
})
report = harness.run_sweep(cfg, seed=9)
print("\n  eps  observable          estimate +- se        oracle")
for row in report.rows:
    for name in harness.OBSERVABLES:
        v, s = row[name]
        o, _ = report.oracle[name]
        print(f"{row['epsilon']:5.2f}  {name:17s} {v:10.4f} +- {s:<8.4f} {o:10.4f}")

with tempfile.TemporaryDirectory() as tmp:
    for path in harness.report_emit(report, tmp, "demo"):
        print("wrote", path.name)
