"""Positivity of inf J for a given datum: picks the exact rank-one test when it applies."""
from dataclasses import dataclass, field

from . import condition_c as cc
from . import rank_one as r1
from .classify import classify
from .problem import Problem, validate


@dataclass
class PositivityVerdict:
    member: bool
    method: str
    certificate: dict
    notes: list = field(default_factory=list)
    complete: bool = True


def rank_one_applicable(p: Problem) -> bool:
    try:
        r1.build_graph(r1.from_problem(p))
    except ValueError:
        return False
    return True


def decide_problem(p: Problem, depth: int = 2, random_subspaces: int = 0, seed: int = 0) -> PositivityVerdict:
    p = validate(p)
    cl = classify(p)
    if cl.case != "Case11":
        # degenerate cases have inf J = 0 or +inf, never a finite positive infimum
        return PositivityVerdict(False, "classifier", {"case": cl.case, "statements": cl.statements})
    try:
        g = r1.build_graph(r1.from_problem(p))
    except ValueError as e:
        rep = cc.check_condition_c(p, depth=depth, random_subspaces=random_subspaces, seed=seed)
        cert = {"candidates_examined": rep.candidates_examined, "truncated": rep.truncated}
        if rep.witness:
            cert["witness"] = rep.witness
        notes = [f"rank-one test not applicable: {e}"]
        return PositivityVerdict(rep.holds, "condition-c", cert, notes, complete=not rep.holds)
    v = r1.decide(list(p.exponents), g)
    cert = dict(v.certificate)
    cert["graph"] = sorted(g.edges)
    return PositivityVerdict(v.member, "rank-one", cert, v.notes)
