"""
Which attributes drive consistency scores?
==========================================

With a finished run on disk, two questions follow. First, which profile
attributes predict the consistency score? A random-forest regressor fits
the one-hot-encoded attributes against the scores and reports impurity-based
feature importances. Second, did selection skew the population - are
candidates demographically different from the pool they came from?

The CLI equivalent:

    studentsim analyze --out run --phase propagated
"""

import pathlib
import tempfile

from studentsim import RunConfig, run_pipeline
from studentsim.pipeline import analyze_run

workdir = pathlib.Path(tempfile.mkdtemp(prefix="studentsim-demo-"))

# A mid-sized run gives the forest something to chew on.
config = RunConfig(seed=7, n_profiles=120, stub_high_count=15, out_dir=str(workdir / "run"))
run_pipeline(config)

summary = analyze_run(workdir / "run", phase="propagated", seed=1, n_trees=60)

for kind in ("profile", "behavior"):
    info = summary["kinds"][kind]
    print(f"\n{kind} score forest: "
          f"trained on {info['forest']['n_train']} profiles, "
          f"test MSE {info['forest']['test_mse']:.4f}")
    print("top attributes by relative importance:")
    for entry in info["top_features"][:5]:
        print(f"  {entry['relative']:6.3f}  {entry['feature']}  [{entry['category']}]")

print("\nartifacts written:")
for path in sorted((workdir / "run" / "analysis").iterdir()):
    print(f"  analysis/{path.name}")

# The distribution CSV compares attribute shares between the population and
# the selected candidates - the place to look for selection bias.
lines = (workdir / "run" / "analysis" / "distribution.csv").read_text().splitlines()
print("\ndistribution shift (first rows):")
for line in lines[:6]:
    print(f"  {line}")
