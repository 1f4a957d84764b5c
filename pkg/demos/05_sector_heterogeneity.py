"""Per-sector effects: the certification pays differently by field.

Each sector has its own base effect, dampened for high-ability workers
(diminishing returns). Splitting the pooled estimate by sector recovers
the ordering of the per-sector truths even at modest per-sector n.
"""
from textdml.bench import ExperimentPlan, run_sector_split

plan = ExperimentPlan(n_units=5000, seeds=(0,))
report = run_sector_split(plan)

print(f"{'sector':<16} {'n':>5} {'true ATE':>9} {'theta_hat':>10} {'bias %':>8}")
for row in report.sectors:
    if row["status"] != "ok":
        print(f"{row['sector']:<16} {row['n_units']:>5}   [{row['status']}]")
        continue
    print(
        f"{row['sector']:<16} {row['n_units']:>5} {row['true_ate']:>9.1f} "
        f"{row['theta_hat']:>10.1f} {row['bias_pct']:>+8.1f}"
    )
