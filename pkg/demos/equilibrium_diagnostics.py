"""Measuring how far a strategy pair is from equilibrium.

Two measurements: the potential gap (a maximization over joint deviations
that is zero exactly at equilibria) and the unilateral deviation gain
(what each player could grab by switching, holding the other fixed). The
potential gap always dominates half the deviation gain.

Run: python demos/equilibrium_diagnostics.py
"""

import numpy as np

from nzs import (JointPoint, SolverConfig, SparseMatrix, deviation_gain,
                 fee_game, potential_gap, solve_eg)

M = SparseMatrix.from_dense(np.array([[0.8, -0.5],
                                      [-0.3, 0.6]]))
game = fee_game(M, rho=0.02, reg_mu=0.6, reg_nu=0.9).game_spec()

points = {
    "uniform play": JointPoint(np.array([0.5, 0.5]), np.array([0.5, 0.5])),
    "pure corner": JointPoint(np.array([1.0, 0.0]), np.array([0.0, 1.0])),
}
solved = solve_eg(game, SolverConfig(epsilon=1e-14)).point
points["solver output"] = solved

print(f"{'point':<16} {'potential gap':>15} {'deviation gain':>16}")
for name, z in points.items():
    pg = potential_gap(game, z)
    dg = deviation_gain(game, z)
    print(f"{name:<16} {pg.value:>15.3e} {dg.value:>16.3e}")
    assert pg.value >= -1e-9
    assert 2 * (pg.value + pg.residual) >= dg.value - 1e-6

print("\nboth measurements vanish at the solver output and the potential")
print("gap dominates half the deviation gain everywhere, as it must")
