"""Collision probability inside one radio cell: closed forms vs Monte Carlo.

With n contenders drawing back-offs uniformly from a window of width W and a
minimum separation of t_min, the chance that a tagged transmission collides
is about 2*n*t_min/W when the window is sparsely occupied.  Announcing the
chosen time first (the two-phase scheme) means a collision needs *two*
uncoordinated picks to clash, which squares the probability.
"""

from backoffsim.analysis import CellModel, mc_cell, mc_pair_collision, prob_arbp

k = 8
cell = CellModel(n=k - 1, t_min=0.004, window_width=0.5)

p_formula = prob_arbp(cell)
p_mc = mc_cell("arbp", k, cell, trials=200_000, seed=1)
q_mc = mc_cell("ibsp", k, cell, trials=200_000, seed=1)

print(f"cell with {k} contenders, t_min={cell.t_min}, W={cell.window_width}")
print(f"  single-phase collision probability: formula {p_formula:.4f}, MC {p_mc:.4f}")
print(f"  two-phase collision probability:    p^2 = {p_mc**2:.4f}, MC {q_mc:.4f}")

t_min, width = 0.01, 0.5
tau = t_min / width
pair = mc_pair_collision(t_min, width, trials=1_000_000, seed=2)
print(f"\npair of contenders, normalized overlap tau={tau}:")
print(f"  exact 2*tau - tau^2 = {2 * tau - tau**2:.5f}, MC {pair:.5f}")
