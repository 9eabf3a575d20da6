"""Solve an exported margin model with SCIP and write a reply file.

Usage::

    python -m stvmargin.scip_bridge MODEL.json REPLY.json

Meant to be the command behind ``--oracle external:...``.  Reads
``MARGIN_TIME_LIMIT`` (seconds), ``MARGIN_REL_GAP`` and ``MARGIN_CUTOFF``
from the environment.  With a cutoff, "infeasible" means no manipulation
cheaper than the cutoff exists, so the reply reports the cutoff as a dual
bound instead.

Requires the optional ``pyscipopt`` package.
"""

from __future__ import annotations

import json
import math
import os
import sys


def solve(doc: dict, time_limit=None, rel_gap=None, cutoff=None) -> dict:
    from pyscipopt import Model, quicksum

    m = Model("margin")
    m.hideOutput()
    xs = {}
    for v in doc["vars"]:
        vtype = "B" if v["kind"] == "bin" else "C"
        lb = v["lb"] if v["lb"] is not None else None
        ub = v["ub"] if v["ub"] is not None else None
        xs[v["name"]] = m.addVar(v["name"], vtype=vtype, lb=lb, ub=ub)

    def expr(terms):
        parts = []
        for t in terms:
            prod = t["coef"]
            for n in t["vars"]:
                prod = prod * xs[n]
            parts.append(prod)
        return quicksum(parts)

    for k in doc["constraints"]:
        lhs = expr(k["terms"])
        rel, rhs = k["relation"], k["rhs"]
        if rel == "=":
            m.addCons(lhs == rhs, name=k["name"])
        elif rel == "<=":
            m.addCons(lhs <= rhs, name=k["name"])
        else:
            m.addCons(lhs >= rhs, name=k["name"])
    obj = quicksum(t["coef"] * xs[t["var"]] for t in doc["objective"]["terms"])
    m.setObjective(obj, "minimize")
    if cutoff is not None:
        m.addCons(obj <= cutoff - 1 + 1e-6, name="cutoff")
    if time_limit is not None:
        m.setParam("limits/time", float(time_limit))
    if rel_gap is not None:
        m.setParam("limits/gap", float(rel_gap))
    m.setParam("lp/checkstability", False)
    m.optimize()
    status = m.getStatus()
    primal = m.getObjVal() if m.getNSols() > 0 else None
    try:
        dual = m.getDualbound()
    except Exception:
        dual = None
    if dual is not None and (math.isinf(dual) or math.isnan(dual)):
        dual = None
    if status == "infeasible":
        if cutoff is not None:
            return {"status": "gap", "primal": None, "dual": cutoff}
        return {"status": "infeasible", "primal": None, "dual": None}
    if status == "optimal":
        return {"status": "optimal", "primal": primal, "dual": primal if dual is None else dual}
    if status == "gaplimit":
        return {"status": "gap", "primal": primal, "dual": dual}
    return {"status": "timeout", "primal": primal, "dual": dual}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) < 1:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[0]) as fh:
        doc = json.load(fh)
    env = os.environ
    tl = env.get("MARGIN_TIME_LIMIT")
    gap = env.get("MARGIN_REL_GAP")
    cut = env.get("MARGIN_CUTOFF")
    reply = solve(doc, float(tl) if tl else None, float(gap) if gap else None, int(cut) if cut else None)
    text = json.dumps(reply)
    if len(argv) > 1:
        with open(argv[1], "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
