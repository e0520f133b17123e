"""One existential rule, two queries.

P(c) plus "every P has an R-successor" entails that some R-edge exists, but
not that its target is a P. The chase makes this concrete: the invented
successor is a labeled null with no further facts about it.

    python3 demos/counterexample.py
"""

from pathlib import Path

from pwlward.chase import bounded_chase
from pwlward.rewriter import evaluate_rewriting, rewrite_to_pwl_datalog
from pwlward.solver import decide_pwl_warded
from pwlward.textio import parse_database, parse_program, parse_query, serialize_database, serialize_program

DATA = Path(__file__).parent / "data"

rules = parse_program((DATA / "counterexample.tgd").read_text())
db = parse_database((DATA / "counterexample.facts").read_text())
q1 = parse_query((DATA / "q1.cq").read_text())
q2 = parse_query((DATA / "q2.cq").read_text())

print("chase result:")
print(serialize_database(bounded_chase(db, rules).instance))

for q in (q1, q2):
    d = decide_pwl_warded(db, rules, q, trace=True)
    print(f"{q}  ->  {d.value}   (goals expanded: {d.stats.expanded}, width bound {d.stats.bound})")
    for step in d.trace or []:
        print(f"    {step['op']:<24} {step['goal']}")

# The same questions answered by a compiled Datalog program.
datalog, out_q = rewrite_to_pwl_datalog(rules, q1)
print("\nrewriting of", q1)
print(serialize_program(datalog))
print("answers on P(c):", evaluate_rewriting(datalog, out_q, db))
