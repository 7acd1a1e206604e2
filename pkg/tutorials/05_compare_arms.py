"""
Default MLP vs GA selection vs PCA
==================================

Run the three arms on iris (or on the dataset named on the command line)
and print the comparison table.  Heart takes about a minute.

    python tutorials/05_compare_arms.py heart
"""
import sys

from featureopt.harness import ExperimentConfig, run_experiment

dataset = sys.argv[1] if len(sys.argv) > 1 else "iris"
report = run_experiment(ExperimentConfig(dataset=dataset, seed=42), write=False)
print(report.to_table())

ga = report.arm("ga")
print("GA mask:", ga.detail["mask"], "->", ", ".join(ga.detail["selected_features"]))
p = report.arm("pca")
print(f"PCA kept k={p.detail['k']} components "
      f"({p.detail['cumulative_variance_ratio']:.3f} of the variance); "
      f"with scaling k would be {p.detail['k_by_scaling']['scaled']}")
