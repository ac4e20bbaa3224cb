"""Walk through an ε-minimizer of f(x) = [eˣ, eˣ + 1] (x < 0) on a fine grid.

Run with ``python3 demos/ekeland_exp.py``.
"""

import math

import numpy as np

from ivelvp.ekeland import check_ekeland_point, ekeland_minimize
from ivelvp.ivfunc import infimum
from ivelvp.problems import function_from_json, load

eps = 0.25
f = function_from_json(load("bundled:ekeland_exp"))
inf = infimum(f)
print(f"grid infimum of f: {inf}")

# x0 = ln ε puts f(x0) within [ε, ε] of the infimum
x0 = math.log(eps)
print(f"start x0 = ln {eps} = {x0:.4f}, f(x0) = {f(x0)}")

cert = ekeland_minimize(f, eps, [x0])
print(f"solver returned x̄ = {np.ravel(cert.x_bar)[0]:.4f} after {len(cert.trace) - 1} descent steps")
print(f"  (a) f(x̄) ≼ f(x0): {cert.cond_a}")
print(f"  (b) d(x0, x̄) ≤ 1: {cert.cond_b}")
print(f"  (c) no strict ε-improvement exists: {cert.cond_c_witness is None}")
print(f"  checked over: {cert.verified_over}")

# a second valid point, one unit to the left of x0
s = f.sample(extra=[np.array([x0]), np.array([x0 - 1.0])])
v = check_ekeland_point(s, eps, s.index_of([x0]), s.index_of([x0 - 1.0]))
print(f"x0 - 1 also satisfies (a)(b)(c): {v['cond_a'] and v['cond_b'] and v['cond_c_witness'] is None}")
