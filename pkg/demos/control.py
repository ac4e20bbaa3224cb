"""ε-minimal piecewise-constant control for cost [u², u² + 1] over a quantized family.

Run with ``python3 demos/control.py``.
"""

from ivelvp.ivode import batch_costs, cost_functional, epsilon_minimal_control, solve_ivp
from ivelvp.problems import control_from_json, load

prob = control_from_json(load("bundled:control_zero"))
fam = prob.family
print(f"family: {fam.K} pieces, levels {fam.levels}, {fam.size} controls")

tr = solve_ivp(prob.ivp, prob.u0)
print(f"state at T under u0: [{tr.lower[-1]:.4f}, {tr.upper[-1]:.4f}]")
print(f"F(u0) = {cost_functional(prob.ivp, prob.u0, prob.cost)}")

res = epsilon_minimal_control(prob.ivp, prob.cost, prob.epsilon, fam, prob.u0)
print(f"ε = {prob.epsilon}: returned {[p[0] for p in res.control]} with F = {res.cost}")
print(f"descent steps: {len(res.certificate.trace) - 1}")
print(f"no member beats it by ε times its distance: {res.verified}")

lo, hi, _ = batch_costs(prob.ivp, fam.controls(), prob.cost)
print(f"family cost range: lower in [{lo.min():.3f}, {lo.max():.3f}], upper in [{hi.min():.3f}, {hi.max():.3f}]")
