"""A small class hierarchy with restrictions and inverse roles.

Shows the classifier's view of the rules (affected positions, wards,
levels), then answers type queries with both proof-search engines and checks
them against the chase.

    python3 demos/ontology.py
"""

from pathlib import Path

from pwlward.analysis import classify
from pwlward.chase import certain_answers_via_chase
from pwlward.normalize import normalize
from pwlward.solver import all_answers
from pwlward.textio import parse_database, parse_program, parse_query, serialize_program

DATA = Path(__file__).parent / "data"
rules = parse_program((DATA / "ontology.tgd").read_text())

rep = classify(rules)
print(f"warded={rep.warded}  pwl={rep.pwl}  levels={rep.levels}")
print("affected:", ", ".join(sorted(map(str, rep.affected))))
for ra in rep.per_rule:
    print(f"  {str(ra.rule):<55} ward: {ra.ward_atom}")

leveled, trace = normalize(rules)
print("\nafter normalization (padding predicates keep body levels at k or k-1):")
print(serialize_program(leveled))

q = parse_query((DATA / "ontology_type.cq").read_text())
for name in ("ontology_subclass.facts", "ontology_inverse.facts"):
    db = parse_database((DATA / name).read_text())
    chase, _ = certain_answers_via_chase(db, rules, q)
    linear = all_answers(db, rules, q, engine="prooftree")
    andor = all_answers(db, rules, q, engine="andor")
    shown = sorted(",".join(map(str, t)) for t in linear)
    print(f"{name}: {shown}  (agrees with chase: {linear == andor == chase})")

# On the inverse database the derived type lands on the invented individual.
db = parse_database((DATA / "ontology_inverse.facts").read_text())
for text in ("Q :- Type('o',B).", "Q :- Type(x,B)."):
    print(f"{text:<22} {bool(all_answers(db, rules, parse_query(text)))}")
