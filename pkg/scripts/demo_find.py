#!/usr/bin/env python3
"""Search demo: analytic success probability vs exact simulation.

Runs three initial states side by side: the uniform state, an entangled
state with prescribed sector moments, and a one-to-one data map (the
regime where amplification provably does nothing).
"""
import math

from entgrover import (
    GoodSet,
    best_integer_time,
    from_amplitudes,
    good_mass,
    grover_trajectory,
    moments,
    new_flat,
    optimal_times,
    oscillation_params,
    p_max,
    random_with_moments,
    success_probability,
)

import numpy as np


def show(label, state, good, n_max=None):
    m = moments(state, good)
    p = oscillation_params(m)
    print(f"\n== {label}  (N={state.n_states}, D={state.data_dim}, t={good.t}) ==")
    print(f"theta={m.theta:.6f}  var_g={m.var_g:.4f}  var_b={m.var_b:.4f}")
    if p.degenerate:
        print(f"degenerate oscillation: P(n) = {p.p_av:.6f} for every n")
    else:
        print(f"P_av={p.p_av:.6f}  dP={p.delta_p:.6f}  phi_r={p.phi_r:+.6f}  phi_i={p.phi_i:.6f}")
        print(f"n_0={optimal_times(p, 0):.4f}  best integer n={best_integer_time(p)}  "
              f"P_max={p_max(p):.6f}")
    if n_max is None:
        n_max = math.ceil(math.pi / m.theta) if 0 < good.t < state.n_states else 8
    print(" n   P(analytic)   P(simulated)   |dev|")
    worst = 0.0
    for n, sim in grover_trajectory(state, good, n_max):
        p_sim = good_mass(sim, good)
        p_an = success_probability(p, n)
        worst = max(worst, abs(p_an - p_sim))
        print(f"{n:3d}   {p_an:.9f}   {p_sim:.9f}   {abs(p_an - p_sim):.2e}")
    print(f"max deviation over table: {worst:.3e}")


def main():
    show("uniform state", new_flat(3, 1), GoodSet((2,)))

    good = GoodSet((1, 4, 11))
    entangled = random_with_moments(
        4, 2, good,
        target_var_g=0.15, target_var_b=0.05,
        g_avg=[1.0, 0.2], b_avg=[0.9, -0.1j],
        seed=2026,
    )
    show("entangled state with prescribed moments", entangled, good)

    show("one-to-one data map", from_amplitudes(np.eye(8)), GoodSet((0, 1)), n_max=8)


if __name__ == "__main__":
    main()
