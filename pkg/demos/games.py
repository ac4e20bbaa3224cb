"""ε-Nash equilibria of a random 5×5 interval game, solved and then checked by enumeration.

Run with ``python3 demos/games.py``.
"""

import numpy as np

from ivelvp.games import epsilon_nash_mask, find_epsilon_nash, random_game, verify_epsilon_nash

rng = np.random.default_rng(0)
G = random_game(rng, sizes=(5, 5))
eps = 0.1

res = find_epsilon_nash(G, eps)
print(f"solver profile {res.labels} via {res.route}")
print(f"triangle property of the aggregate bifunction holds: {res.triangle.holds}"
      f" ({res.triangle.checked} triples checked)")
print(f"result labelled heuristic: {res.heuristic}")

ok, witness = verify_epsilon_nash(G, res.profile, eps)
print(f"independent deviation check: {'ε-Nash' if ok else witness}")

for e in (0.0, 0.05, 0.1, 0.5):
    mask = epsilon_nash_mask(G, e)
    print(f"ε = {e:<4}: {int(mask.sum()):2d} of {G.n_profiles} profiles are ε-Nash")
