#!/usr/bin/env python3
"""Minimal MPS reader feeding scipy.optimize.milp; writes a CBC style solution.

usage: milp_shim.py model.mps solution.txt
"""
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp


def read_mps(path):
    rows, senses, cols, coef, rhs, upper = [], {}, [], {}, {}, {}
    integer, in_int, section = set(), False, None
    for raw in open(path):
        if not raw.strip():
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "ROWS":
            senses[f[1]] = f[0]
            if f[0] != "N":
                rows.append(f[1])
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            name = f[0]
            if name not in coef:
                cols.append(name)
                coef[name] = {}
            if in_int:
                integer.add(name)
            for i in range(1, len(f) - 1, 2):
                coef[name][f[i]] = float(f[i + 1])
        elif section == "RHS":
            for i in range(1, len(f) - 1, 2):
                rhs[f[i]] = float(f[i + 1])
        elif section == "BOUNDS":
            if f[0] == "UP":
                upper[f[2]] = float(f[3])
    return rows, senses, cols, coef, rhs, upper, integer


def main(mps, out):
    rows, senses, cols, coef, rhs, upper, integer = read_mps(mps)
    index = {r: i for i, r in enumerate(rows)}
    obj_row = next(r for r, s in senses.items() if s == "N")
    c = np.array([coef[v].get(obj_row, 0.0) for v in cols])
    a = np.zeros((len(rows), len(cols)))
    for j, v in enumerate(cols):
        for r, x in coef[v].items():
            if r in index:
                a[index[r], j] = x
    lo = np.full(len(rows), -np.inf)
    hi = np.full(len(rows), np.inf)
    for r, i in index.items():
        b = rhs.get(r, 0.0)
        if senses[r] in ("E", "G"):
            lo[i] = b
        if senses[r] in ("E", "L"):
            hi[i] = b
    bounds = Bounds(np.zeros(len(cols)), np.array([upper.get(v, np.inf) for v in cols]))
    integrality = np.array([1 if v in integer else 0 for v in cols])
    cons = [LinearConstraint(a, lo, hi)] if rows else []
    res = milp(c, constraints=cons, bounds=bounds, integrality=integrality)
    with open(out, "w") as fh:
        if res.status == 2:
            fh.write("Infeasible - objective value 0.00000000\n")
            return
        if res.status != 0:
            fh.write("Stopped on limit - objective value 0.00000000\n")
            return
        fh.write(f"Optimal - objective value {res.fun:.8f}\n")
        for j, v in enumerate(cols):
            fh.write(f"{j:>7} {v:<20} {res.x[j]:>15.8g} {0:>15}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
