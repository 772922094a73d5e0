#!/usr/bin/env python3
"""Solve a free-format MPS file with scipy's HiGHS and write a flowgraph solution file.

usage: highs_solve.py INPUT.mps OUTPUT.txt [--seed N]

HiGHS through scipy exposes no seed, so --seed is accepted and ignored.
Integrality markers are honoured.
"""
import argparse
import math
import sys

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix


def read_mps(path):
    rows, senses, obj_name = [], {}, None
    row_index = {}
    cols, col_index, integer = [], {}, []
    entries, cost = [], {}
    rhs, ranges = {}, {}
    lower, upper = {}, {}
    section, in_int = None, False
    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("*"):
                continue
            if not raw[0].isspace():
                section = line.split()[0]
                continue
            tok = line.split()
            if section == "ROWS":
                kind, name = tok
                if kind == "N":
                    obj_name = obj_name or name
                else:
                    row_index[name] = len(rows)
                    rows.append(name)
                    senses[name] = kind
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                col = tok[0]
                if col not in col_index:
                    col_index[col] = len(cols)
                    cols.append(col)
                    integer.append(in_int)
                j = col_index[col]
                for r, v in zip(tok[1::2], tok[2::2]):
                    if r == obj_name:
                        cost[j] = cost.get(j, 0.0) + float(v)
                    else:
                        entries.append((row_index[r], j, float(v)))
            elif section == "RHS":
                for r, v in zip(tok[1::2], tok[2::2]):
                    if r != obj_name:
                        rhs[r] = float(v)
            elif section == "RANGES":
                for r, v in zip(tok[1::2], tok[2::2]):
                    ranges[r] = float(v)
            elif section == "BOUNDS":
                kind, name = tok[0], tok[2]
                v = float(tok[3]) if len(tok) > 3 else None
                j = col_index[name]
                if kind == "UP":
                    upper[j] = v
                elif kind == "LO":
                    lower[j] = v
                elif kind == "FX":
                    lower[j] = upper[j] = v
                elif kind == "FR":
                    lower[j], upper[j] = -math.inf, math.inf
                elif kind == "MI":
                    lower[j] = -math.inf
                elif kind == "PL":
                    upper[j] = math.inf
                elif kind == "BV":
                    lower[j], upper[j] = 0.0, 1.0
                    integer[j] = True
                else:
                    raise ValueError(f"unsupported bound type {kind}")
    m, n = len(rows), len(cols)
    lo_row, up_row = np.full(m, -np.inf), np.full(m, np.inf)
    for i, name in enumerate(rows):
        b = rhs.get(name, 0.0)
        s = senses[name]
        r = ranges.get(name)
        if s == "E":
            lo_row[i] = up_row[i] = b
            if r is not None:
                if r > 0:
                    up_row[i] = b + r
                else:
                    lo_row[i] = b + r
        elif s == "L":
            up_row[i] = b
            if r is not None:
                lo_row[i] = b - abs(r)
        elif s == "G":
            lo_row[i] = b
            if r is not None:
                up_row[i] = b + abs(r)
    if entries:
        ri, cj, v = zip(*entries)
    else:
        ri, cj, v = (), (), ()
    a = csr_matrix((v, (ri, cj)), shape=(m, n))
    c = np.zeros(n)
    for j, v in cost.items():
        c[j] = v
    lb = np.array([lower.get(j, 0.0) for j in range(n)])
    ub = np.array([upper.get(j, math.inf) for j in range(n)])
    return cols, c, a, lo_row, up_row, lb, ub, np.array(integer, dtype=int)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    cols, c, a, lo, up, lb, ub, integ = read_mps(args.input)
    kw = {}
    if a.shape[0] > 0:
        eq = lo == up
        ineq = ~eq
        if eq.any():
            kw["A_eq"], kw["b_eq"] = a[eq], lo[eq]
        if ineq.any():
            ai = a[ineq]
            parts, rhs = [], []
            finite_up = np.isfinite(up[ineq])
            finite_lo = np.isfinite(lo[ineq])
            if finite_up.any():
                parts.append(ai[finite_up])
                rhs.append(up[ineq][finite_up])
            if finite_lo.any():
                parts.append(-ai[finite_lo])
                rhs.append(-lo[ineq][finite_lo])
            if parts:
                from scipy.sparse import vstack
                kw["A_ub"], kw["b_ub"] = vstack(parts).tocsr(), np.concatenate(rhs)
    res = linprog(c, bounds=list(zip(lb, ub)), integrality=integ if integ.any() else None, method="highs", **kw)
    with open(args.output, "w") as f:
        if res.status == 0:
            f.write("status optimal\n")
            f.write(f"obj {res.fun!r}\n")
            for name, x in zip(cols, res.x):
                f.write(f"{name} {float(x)!r}\n")
        elif res.status == 2:
            f.write("status infeasible\n")
        elif res.status == 3:
            f.write("status unbounded\n")
        else:
            print(res.message, file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
