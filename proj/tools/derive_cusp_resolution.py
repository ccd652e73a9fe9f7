#!/usr/bin/env python3
"""Re-derive the resolution of x^2 + y^3 by point blow-ups and compare it with
the shipped cusp model and with the dual complex printed by nc-retract.

Exit status 0 when everything agrees, 1 otherwise.
"""

import argparse
import csv
import itertools
import json
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field

import sympy as sp

x, y = sp.symbols("x y")
F = x**2 + y**3


@dataclass
class Chart:
    name: str
    a: sp.Symbol
    b: sp.Symbol
    # (x, y) as functions of the local coordinates.
    to_xy: tuple
    # Defining equation of each visible component in local coordinates.
    comps: dict = field(default_factory=dict)


def strip(h, var):
    """Remove every factor of var from h."""
    h = sp.factor(h)
    while sp.simplify(h.subs(var, 0)) == 0 and h != 0:
        h = sp.factor(sp.cancel(h / var))
    return h


def blow_up(chart, label, counter):
    """Blow up the origin of a chart; returns the two new charts."""
    out = []
    for k, exc_first in enumerate((True, False)):
        s, t = sp.symbols(f"s{counter}{k} t{counter}{k}")
        sub = {chart.a: s, chart.b: s * t} if exc_first else {chart.a: s * t, chart.b: t}
        exc = s if exc_first else t
        comps = {}
        for name, h in chart.comps.items():
            pulled = strip(sp.expand(h.subs(sub, simultaneous=True)), exc)
            comps[name] = pulled
        comps[label] = exc
        to_xy = tuple(sp.expand(c.subs(sub, simultaneous=True)) for c in chart.to_xy)
        out.append(Chart(f"{chart.name}{'ab'[k]}", s, t, to_xy, comps))
    return out


def order_along(h, var):
    n = 0
    h = sp.expand(h)
    while sp.expand(h.subs(var, 0)) == 0:
        h = sp.expand(sp.cancel(h / var))
        n += 1
    return n


def visible(h):
    """True when h vanishes somewhere in the chart (h is not a nonzero constant)."""
    return not (sp.simplify(h).is_number and h != 0)


def meet(h1, h2, a, b):
    sols = sp.solve([h1, h2], [a, b], dict=True)
    return len(sols) > 0


def derive():
    a0, b0 = sp.symbols("a0 b0")
    base = Chart("P", a0, b0, (a0, b0), {"St": F.subs({x: a0, y: b0})})
    # E1: blow up the singular point. E2: the strict transform is tangent to
    # E1 at the origin of the second chart. E3: three components meet there.
    c1a, c1b = blow_up(base, "E1", 1)
    c2a, c2b = blow_up(c1b, "E2", 2)
    c3a, c3b = blow_up(c2a, "E3", 3)
    final = [c1a, c2b, c3a, c3b]

    mult = {}
    edges = set()
    for ch in final:
        f_local = sp.expand(F.subs({x: ch.to_xy[0], y: ch.to_xy[1]}, simultaneous=True))
        for name, h in ch.comps.items():
            if name != "St" and h in (ch.a, ch.b):
                m = order_along(f_local, h)
                if mult.setdefault(name, m) != m:
                    raise SystemExit(f"inconsistent multiplicity for {name}")
        seen = {n: h for n, h in ch.comps.items() if visible(h)}
        for (n1, h1), (n2, h2) in itertools.combinations(sorted(seen.items()), 2):
            if meet(h1, h2, ch.a, ch.b):
                edges.add(tuple(sorted((n1, n2))))
    mult["St"] = 1
    return mult, edges, final


def check_model(model, mult):
    problems = []
    declared = {c["id"]: c["multiplicity"] for c in model["components"]}
    if declared != mult:
        problems.append(f"multiplicities {declared} differ from derived {mult}")
    x1, x2 = sp.symbols("x1 x2")
    amb = sp.sympify(model["modification"]["ambient_f"].replace("^", "**"))
    for chart in model["charts"]:
        sigma = [sp.sympify(e.replace("^", "**")) for e in model["modification"]["sigma"][chart["id"]]]
        pulled = sp.expand(amb.subs({x1: sigma[0], x2: sigma[1]}, simultaneous=True))
        g = sp.sympify(chart["unit_factor"].replace("^", "**"))
        a = chart["exponents"]
        target = sp.expand(x1 ** a[0] * x2 ** a[1] * g)
        if sp.simplify(pulled - target) != 0:
            problems.append(f"chart {chart['id']}: f o sigma = {sp.factor(pulled)} but model says {sp.factor(target)}")
    return problems


def check_cli(cli, model_path, edges):
    with tempfile.TemporaryDirectory() as tmp:
        out_csv = os.path.join(tmp, "dual.csv")
        subprocess.run([cli, "describe", "--model", model_path, "--out", out_csv], check=True, capture_output=True)
        with open(out_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    reported = {tuple(r["components"].split()) for r in rows if int(r["depth"]) == 2}
    if reported != edges:
        return [f"dual complex edges {sorted(reported)} differ from derived {sorted(edges)}"]
    return []


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="models/cusp.json")
    ap.add_argument("--cli", help="path to nc-retract; skip the CLI comparison when absent")
    args = ap.parse_args()

    mult, edges, final = derive()
    print("derived multiplicities:", dict(sorted(mult.items())))
    print("derived intersections:", sorted(edges))
    for ch in final:
        print(f"  chart {ch.name}: (x, y) = {ch.to_xy}, components {ch.comps}")

    with open(args.model) as fh:
        model = json.load(fh)
    problems = check_model(model, mult)
    if args.cli:
        problems += check_cli(args.cli, args.model, edges)
    for p in problems:
        print("MISMATCH", p)
    print("OK" if not problems else "FAILED")
    return 0 if not problems else 1


if __name__ == "__main__":
    sys.exit(main())
