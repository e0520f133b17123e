"""Terms, atoms, rules and queries, plus homomorphism search over instances.

Terms are interned: constructing ``Constant("a")`` twice returns the same
object, so equality and hashing are identity based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple


class Term:
    __slots__ = ("name",)
    kind = -1
    _cache: dict

    def __new__(cls, name):
        cache = cls._cache
        term = cache.get(name)
        if term is None:
            term = object.__new__(cls)
            object.__setattr__(term, "name", name)
            cache[name] = term
        return term

    def __setattr__(self, key, value):
        raise AttributeError("terms are immutable")

    def __reduce__(self):
        return (type(self), (self.name,))

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    @property
    def sort_key(self) -> tuple:
        return (self.kind, self.name)

    def __lt__(self, other: "Term") -> bool:
        return self.sort_key < other.sort_key


class Constant(Term):
    __slots__ = ()
    kind = 0
    _cache = {}

    def __repr__(self):
        return f"Constant({self.name!r})"

    def __str__(self):
        return self.name


class Null(Term):
    __slots__ = ()
    kind = 1
    _cache = {}

    def __repr__(self):
        return f"Null({self.name})"

    def __str__(self):
        return f"⊥{self.name}"


class Variable(Term):
    __slots__ = ()
    kind = 2
    _cache = {}

    def __repr__(self):
        return f"Variable({self.name!r})"

    def __str__(self):
        return self.name


Substitution = dict  # Term -> Term


class Atom(NamedTuple):
    predicate: str
    args: tuple

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> set:
        return {t for t in self.args if isinstance(t, Variable)}

    def is_ground(self) -> bool:
        return all(isinstance(t, Constant) for t in self.args)

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.args))})"


def atom(predicate: str, *args) -> Atom:
    """Build an atom; string arguments starting lowercase become variables."""
    terms = []
    for a in args:
        if isinstance(a, Term):
            terms.append(a)
        elif isinstance(a, str) and (a[:1].islower() or a[:1] == "_"):
            terms.append(Variable(a))
        else:
            terms.append(Constant(str(a)))
    return Atom(predicate, tuple(terms))


def fact(predicate: str, *args) -> Atom:
    """Build a ground atom; every argument is a constant."""
    return Atom(predicate, tuple(a if isinstance(a, Term) else Constant(str(a)) for a in args))


def variables_of(atoms: Iterable[Atom]) -> set:
    return {t for a in atoms for t in a.args if isinstance(t, Variable)}


def terms_of(atoms: Iterable[Atom]) -> set:
    return {t for a in atoms for t in a.args}


def apply_substitution(s: Mapping, atoms: Iterable[Atom]) -> list[Atom]:
    """Map each argument through ``s``; terms outside its domain are unchanged."""
    get = s.get
    return [Atom(a.predicate, tuple(get(t, t) for t in a.args)) for a in atoms]


def apply_to_atom(s: Mapping, a: Atom) -> Atom:
    get = s.get
    return Atom(a.predicate, tuple(get(t, t) for t in a.args))


def compose(s2: Mapping, s1: Mapping) -> dict:
    """Return s2 ∘ s1 (apply s1 first)."""
    out = {k: s2.get(v, v) for k, v in s1.items()}
    for k, v in s2.items():
        out.setdefault(k, v)
    return {k: v for k, v in out.items() if k is not v}


def _dedupe(atoms: Iterable[Atom]) -> tuple:
    return tuple(dict.fromkeys(atoms))


@dataclass(frozen=True)
class TGD:
    """Rule ``body -> exists z̄: head``; existentials are head-only variables."""

    body: tuple
    head: tuple
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "body", _dedupe(self.body))
        object.__setattr__(self, "head", _dedupe(self.head))

    @cached_property
    def body_variables(self) -> tuple:
        return tuple(dict.fromkeys(t for a in self.body for t in a.args if isinstance(t, Variable)))

    @cached_property
    def head_variables(self) -> tuple:
        return tuple(dict.fromkeys(t for a in self.head for t in a.args if isinstance(t, Variable)))

    @cached_property
    def frontier(self) -> frozenset:
        return frozenset(self.body_variables) & frozenset(self.head_variables)

    @cached_property
    def existentials(self) -> tuple:
        body = set(self.body_variables)
        return tuple(v for v in self.head_variables if v not in body)

    @property
    def is_full(self) -> bool:
        return not self.existentials

    def predicates(self) -> set:
        return {a.predicate for a in self.body} | {a.predicate for a in self.head}

    def __str__(self):
        body = ", ".join(map(str, self.body))
        head = ", ".join(map(str, self.head))
        if self.existentials:
            ex = ", ".join(map(str, self.existentials))
            return f"{body} -> exists {ex}: {head}"
        return f"{body} -> {head}"


@dataclass(frozen=True)
class Program:
    rules: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __iter__(self) -> Iterator[TGD]:
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __getitem__(self, i):
        return self.rules[i]

    @cached_property
    def arities(self) -> dict:
        out = {}
        for r in self.rules:
            for a in (*r.body, *r.head):
                out.setdefault(a.predicate, a.arity)
        return out

    @cached_property
    def schema(self) -> frozenset:
        return frozenset(self.arities)

    @cached_property
    def intensional(self) -> frozenset:
        return frozenset(a.predicate for r in self.rules for a in r.head)

    @cached_property
    def extensional(self) -> frozenset:
        return self.schema - self.intensional

    @property
    def max_body_size(self) -> int:
        return max((len(r.body) for r in self.rules), default=0)

    def __str__(self):
        return "\n".join(f"{r}." for r in self.rules)


@dataclass(frozen=True)
class CQ:
    """Conjunctive query ``head_predicate(output) :- body``."""

    head_predicate: str
    output: tuple
    body: tuple

    def __post_init__(self):
        object.__setattr__(self, "output", tuple(self.output))
        object.__setattr__(self, "body", _dedupe(self.body))
        body_vars = variables_of(self.body)
        for t in self.output:
            if isinstance(t, Variable) and t not in body_vars:
                raise ValueError(f"output variable {t} does not occur in the body")
        for a in self.body:
            if any(isinstance(t, Null) for t in a.args):
                raise ValueError("queries may not mention nulls")

    @property
    def is_boolean(self) -> bool:
        return not self.output

    @property
    def output_variables(self) -> tuple:
        return tuple(dict.fromkeys(t for t in self.output if isinstance(t, Variable)))

    def __len__(self):
        return len(self.body)

    def instantiate(self, answer: tuple) -> list[Atom] | None:
        """Body atoms with outputs bound to ``answer``; None if inconsistent."""
        if len(answer) != len(self.output):
            raise ValueError(f"expected {len(self.output)} answer terms, got {len(answer)}")
        s = {}
        for t, c in zip(self.output, answer):
            if isinstance(t, Variable):
                if s.setdefault(t, c) is not c:
                    return None
            elif t is not c:
                return None
        return apply_substitution(s, self.body)

    def __str__(self):
        head = self.head_predicate
        if self.output:
            head += f"({','.join(map(str, self.output))})"
        return f"{head} :- {', '.join(map(str, self.body))}"


class Instance:
    """A set of atoms over constants and nulls, indexed for matching."""

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._atoms: dict = {}
        self._by_pred: dict = {}
        self._by_arg: dict = {}
        for a in atoms:
            self.add(a)

    def add(self, a: Atom) -> bool:
        if a in self._atoms:
            return False
        self._atoms[a] = None
        self._by_pred.setdefault(a.predicate, []).append(a)
        for i, t in enumerate(a.args):
            self._by_arg.setdefault((a.predicate, i, t), []).append(a)
        return True

    def update(self, atoms: Iterable[Atom]) -> list[Atom]:
        return [a for a in atoms if self.add(a)]

    def __contains__(self, a) -> bool:
        return a in self._atoms

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._atoms)

    def __len__(self):
        return len(self._atoms)

    def __eq__(self, other):
        if isinstance(other, Instance):
            return self._atoms.keys() == other._atoms.keys()
        if isinstance(other, (set, frozenset)):
            return self._atoms.keys() == other
        return NotImplemented

    def __repr__(self):
        return f"Instance({sorted(map(str, self))})"

    def atoms(self) -> frozenset:
        return frozenset(self._atoms)

    def with_predicate(self, predicate: str) -> list[Atom]:
        return self._by_pred.get(predicate, [])

    def predicates(self) -> set:
        return set(self._by_pred)

    def candidates(self, pattern: Atom, binding: Mapping) -> list[Atom]:
        best = self._by_pred.get(pattern.predicate, [])
        by_arg = self._by_arg
        for i, t in enumerate(pattern.args):
            value = binding.get(t, t) if isinstance(t, Variable) else t
            if isinstance(value, Variable):
                continue
            bucket = by_arg.get((pattern.predicate, i, value), ())
            if len(bucket) < len(best):
                best = bucket
                if not best:
                    break
        return best

    def adom(self) -> list:
        """Active domain: constants lexicographically, then nulls by id."""
        return sorted(terms_of(self._atoms), key=lambda t: t.sort_key)

    def copy(self) -> "Instance":
        return Instance(self._atoms)


Database = Instance


def _as_instance(target) -> Instance:
    return target if isinstance(target, Instance) else Instance(target)


def _match(pattern: Atom, candidate: Atom, binding: dict) -> list | None:
    """Extend ``binding`` in place; return the newly bound variables or None."""
    if len(pattern.args) != len(candidate.args):
        return None
    added = []
    for p, c in zip(pattern.args, candidate.args):
        if isinstance(p, Variable):
            bound = binding.get(p)
            if bound is None:
                binding[p] = c
                added.append(p)
            elif bound is not c:
                for v in added:
                    del binding[v]
                return None
        elif p is not c:
            for v in added:
                del binding[v]
            return None
    return added


def find_homomorphisms(pattern: Iterable[Atom], target, fixed: Mapping | None = None) -> Iterator[dict]:
    """Yield every extension of ``fixed`` sending ``pattern`` into ``target``.

    Only variables are mapped; constants and nulls in the pattern must match
    themselves. Atoms are matched fewest-candidates-first.
    """
    target = _as_instance(target)
    pending = list(dict.fromkeys(pattern))
    binding = dict(fixed or {})
    yield from _search(pending, target, binding)


def _search(pending: list, target: Instance, binding: dict) -> Iterator[dict]:
    if not pending:
        yield dict(binding)
        return
    best_i, best_cands = 0, None
    for i, p in enumerate(pending):
        cands = target.candidates(p, binding)
        if best_cands is None or len(cands) < len(best_cands):
            best_i, best_cands = i, cands
            if not cands:
                return
    chosen = pending[best_i]
    rest = pending[:best_i] + pending[best_i + 1:]
    for cand in list(best_cands):
        added = _match(chosen, cand, binding)
        if added is None:
            continue
        yield from _search(rest, target, binding)
        for v in added:
            del binding[v]


def has_homomorphism(pattern: Iterable[Atom], target, fixed: Mapping | None = None) -> bool:
    return next(find_homomorphisms(pattern, target, fixed), None) is not None


def evaluate_cq(q: CQ, instance, keep_nulls: bool = False) -> set:
    """Answers of ``q`` over ``instance``; tuples with nulls are dropped unless asked."""
    instance = _as_instance(instance)
    out = set()
    for h in find_homomorphisms(q.body, instance):
        tup = tuple(h.get(t, t) for t in q.output)
        if keep_nulls or all(isinstance(t, Constant) for t in tup):
            out.add(tup)
    return out
