"""TDMA baseline: one slot per ER with its closed-form matched phase, then
resource allocation only.

With the patterns fixed, the received power in slot j is exactly linear in
P_j, so the remaining problem over (tau, P, z, e) needs no pattern surrogate
at all; it reuses the resource-only SCA of the dynamic module. Cross-slot
harvesting is kept: an ER harvests in every slot, not just its own.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .dynamic_sca import Schedule, Solution, _prune, _resource_sca, audit_schedule, audited_objective
from .eh import per_er

__all__ = ["matched_phase", "solve_tdma"]


def matched_phase(ch: ChannelRealization, k):
    """Pattern aligning every reflected path with ER k's direct path:
    theta_n = exp(j(arg q_k_n - arg h_d_k)), which makes the combined
    amplitude |h_d_k| + sum_n |q_k_n|. Zero-magnitude entries take phase 0."""
    return np.exp(1j * (np.angle(ch.q[k]) - np.angle(ch.h_d[k])))


def solve_tdma(ch: ChannelRealization, eh, cfg: SystemConfig) -> Solution:
    """K matched-phase slots in ER index order, resources optimized by SCA.

    Starts from the even split (tau = T/K, P = min(P_max, E_tot/T)) and keeps
    the audited best point, with the same convergence and audit discipline as
    the dynamic solver.
    """
    eh_list = per_er(eh, ch.n_ers)
    k = ch.n_ers
    phases = np.stack([matched_phase(ch, i) for i in range(k)])
    tau0 = np.full(k, cfg.horizon / k)
    p0 = np.full(k, min(cfg.max_power, cfg.total_energy / cfg.horizon))
    tau, p, _, _, history, converged = _resource_sca(phases, tau0, p0, ch, eh_list, cfg)
    sched = _prune(Schedule(phases=phases, durations=tau, powers=p), cfg)
    per = audit_schedule(sched, ch, eh_list, cfg)
    e = audited_objective(per, cfg.fairness_weights)
    sched.validate(cfg)
    return Solution(e=e, per_er_energy=per, schedule=sched,
                    iterations=len(history) - 1, converged=converged,
                    e_history=history, init_strategy="matched-equal-split")
