"""
Replicated experiments and reference tables
===========================================

Run several seeds per instance, compare with a table of best-known values
and print a summary in the usual benchmark layout.
"""

from qmstp import StopCriterion, exact_optimum, generate_family
from qmstp.harness import RunConfig, format_table, run_experiment

instances = {f"cp10-{k}": generate_family("cp", 10, seed=k, density=0.67) for k in range(3)}
reference = {name: exact_optimum(inst).value for name, inst in instances.items()}

config = RunConfig(stop=StopCriterion.stagnant(5, 20), replicas=4, base_seed=0)
reports = [run_experiment(inst, name, config, reference) for name, inst in instances.items()]
print(format_table(reports, group="CP"))

# Records are plain dicts, ready for json.dumps.
for rec in reports[0].records(timing=False):
    print(rec)
