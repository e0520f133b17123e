"""Compile linear transitive closure into Datalog and run it on random graphs.

The compiled program has one predicate per canonical goal; evaluating it
bottom-up must give the same pairs as the closure computed directly.

    python3 demos/rewriting.py [SEED]
"""

import random
import sys
from pathlib import Path

from pwlward.analysis import classify
from pwlward.generators import random_digraph
from pwlward.rewriter import evaluate_rewriting, rewrite
from pwlward.textio import parse_program, parse_query, serialize_program

DATA = Path(__file__).parent / "data"
seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

rules = parse_program((DATA / "tc_linear.tgd").read_text())
q = parse_query((DATA / "tc.cq").read_text())
res = rewrite(rules, q)
rep = classify(res.program)
print(f"{len(res.program)} rules from {res.states} goals, width bound {res.bound}")
print(f"full datalog: {rep.full_datalog}, piece-wise linear: {rep.pwl}\n")
print(serialize_program(res.program))

rng = random.Random(seed)
for i in range(5):
    db = random_digraph(rng)
    edges = {(a.args[0], a.args[1]) for a in db}
    reach = set(edges)
    while True:
        step = {(u, w) for u, v in reach for v2, w in reach if v == v2} - reach
        if not step:
            break
        reach |= step
    got = evaluate_rewriting(res.program, res.query, db)
    print(f"graph {i}: {len(edges)} edges, {len(reach)} reachable pairs, rewriting agrees: {got == reach}")
