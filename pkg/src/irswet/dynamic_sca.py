"""Dynamic multi-pattern scheme: J reflection patterns time-shared over the
horizon, optimized by successive convex approximation.

One SCA iteration solves a conic subproblem built from three bounds that are
tight at the expansion point:

  f_lb  lower-bounds tau/(1+z)    (affine in sqrt(tau) and z; the quotient is
                                   jointly convex there)
  g_lb  lower-bounds P |qbar^H theta_bar|^2   (affine in theta_bar and 1/P;
                                   the power is jointly convex in those)
  eta_ub upper-bounds -(P-tau)^2  (affine; the negated square is concave)

with z_{k,j} standing in for exp(-a_k(P^recv_{k,j} - b_k)) through an
exponential-cone constraint, so the harvested power X/(1+z) - Y becomes
convex-representable. Unit-modulus phase entries are relaxed to |.| <= 1
during iteration and reconstructed by entrywise projection afterwards.

The objective bookkeeping never trusts the solver: after every subproblem the
slack z is re-tightened against the actual received powers and the iterate's
`e` is the exact sigmoid objective at the returned point, which makes the
recorded ascent sequence rigorous rather than surrogate-optimistic. The solver
run only proposes points; the best audited feasible point wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from . import conic
from .channel import ChannelRealization, SystemConfig, received_rf_power
from .conic import ConicProgram
from .eh import dc_power, per_er

__all__ = [
    "Schedule",
    "ScaIterate",
    "Solution",
    "surrogate_f_lb",
    "surrogate_g_lb",
    "surrogate_eta_ub",
    "initialize",
    "initialize_from_lift",
    "solve_sca_subproblem",
    "project_phases",
    "reconstruct_pattern",
    "solve_dynamic",
    "warm_start_from",
    "audit_schedule",
    "audited_objective",
    "build_subproblem",
    "build_resource_subproblem",
]

_TINY = 1e-300


@dataclass
class Schedule:
    """J reflection patterns with per-slot durations and transmit powers."""

    phases: np.ndarray     # (J, N) complex; unit modulus in a finished schedule
    durations: np.ndarray  # (J,) seconds
    powers: np.ndarray     # (J,) watts

    @property
    def n_slots(self):
        return self.durations.shape[0]

    def validate(self, cfg: SystemConfig, unit_modulus=True):
        tau, p = self.durations, self.powers
        if np.any(tau < 0) or np.any(p < 0):
            raise ValueError("durations and powers must be nonnegative")
        if float(np.sum(tau)) > cfg.horizon + 1e-9:
            raise ValueError(f"slot durations sum to {np.sum(tau)} > horizon {cfg.horizon}")
        if np.any(p > cfg.max_power * (1 + 1e-12)):
            raise ValueError("slot power exceeds max_power")
        spent = float(p @ tau)
        if spent > cfg.total_energy * (1 + 1e-6):
            raise ValueError(f"transmit energy {spent} exceeds budget {cfg.total_energy}")
        if unit_modulus and np.max(np.abs(np.abs(self.phases) - 1.0)) > 1e-9:
            raise ValueError("phase entries must have unit modulus (tolerance 1e-9)")


@dataclass
class ScaIterate:
    """One SCA expansion point. Phases may be sub-unit modulus here, and the
    lifted reference entry of each slot is carried in direct_coeff so the
    relaxed point round-trips exactly between iterations."""

    schedule: Schedule
    slack: np.ndarray          # (K, J) positive, z_{k,j}
    e: float                   # audited objective at this point, joules
    iteration: int
    direct_coeff: np.ndarray   # (J,) complex, last entry of each theta_bar
    improving: bool = True

    def theta_bar(self):
        """(J, N+1) lifted patterns."""
        return np.concatenate([self.schedule.phases, self.direct_coeff[:, None]], axis=1)


@dataclass
class Solution:
    e: float                   # joules, audited min_k per_er/alpha_k
    per_er_energy: np.ndarray  # (K,) joules under the exact harvest model
    schedule: Schedule
    iterations: int
    converged: bool
    e_history: list = field(default_factory=list)
    init_strategy: str = ""


def surrogate_f_lb(z, tau, z_r, tau_r):
    """First-order expansion of tau/(1+z) in the variables (sqrt(tau), z).

    The quotient is jointly convex for z > -1, so the expansion is a global
    lower bound on its domain, with equality at (z_r, tau_r).
    """
    z, tau = np.asarray(z, dtype=float), np.asarray(tau, dtype=float)
    if np.any(z <= 0) or np.any(np.asarray(z_r) <= 0):
        raise ValueError("z and z_r must be strictly positive")
    if np.any(tau < 0) or np.any(np.asarray(tau_r) < 0):
        raise ValueError("tau and tau_r must be nonnegative")
    s, s_r = np.sqrt(tau), math.sqrt(tau_r)
    out = (tau_r / (1.0 + z_r)
           + 2.0 * s_r / (1.0 + z_r) * (s - s_r)
           - tau_r / (1.0 + z_r) ** 2 * (z - z_r))
    return float(out) if out.ndim == 0 else out


def surrogate_g_lb(theta_bar, p, theta_bar_r, p_r, q_lift_k):
    """First-order expansion of p |qbar^H theta_bar|^2 in (theta_bar, 1/p).

    theta^H Q theta / w is jointly convex for PSD Q and w > 0, so this is a
    global lower bound with equality at (theta_bar_r, p_r).
    """
    if p <= 0 or p_r <= 0:
        raise ValueError("powers must be strictly positive")
    theta_bar = np.asarray(theta_bar, dtype=complex)
    theta_bar_r = np.asarray(theta_bar_r, dtype=complex)
    ref = q_lift_k @ theta_bar_r
    t_r = float(np.real(np.vdot(theta_bar_r, ref)))
    cross = float(np.real(np.vdot(theta_bar, ref)))
    return 2.0 * p_r * cross - p_r * t_r - p_r ** 2 * t_r * (1.0 / p - 1.0 / p_r)


def surrogate_eta_ub(p, tau, p_r, tau_r):
    """First-order expansion of -(p - tau)^2, a global upper bound (the
    function is concave), with equality at (p_r, tau_r)."""
    p, tau = np.asarray(p, dtype=float), np.asarray(tau, dtype=float)
    d_r = p_r - tau_r
    out = -d_r ** 2 - 2.0 * d_r * ((p - p_r) - (tau - tau_r))
    return float(out) if out.ndim == 0 else out


def project_phases(theta):
    """Entrywise modulus projection; zero entries take phase 0 by convention."""
    theta = np.asarray(theta, dtype=complex)
    mags = np.abs(theta)
    out = np.where(mags > 0, theta / np.where(mags > 0, mags, 1.0), 1.0 + 0.0j)
    return out


def reconstruct_pattern(theta_bar_row):
    """Feasible N-entry pattern from one relaxed lifted row: rotate so the
    reference entry is real positive, then project entrywise."""
    row = np.asarray(theta_bar_row, dtype=complex)
    ref = row[-1]
    if abs(ref) > 0:
        row = row * (ref.conjugate() / abs(ref))
    return project_phases(row[:-1])


def _relaxed_received(ch, theta_bar, powers):
    """(K, J) received RF powers at the (possibly sub-unit) lifted patterns."""
    amps = ch.q_bar.conj() @ theta_bar.T          # (K, J)
    return powers[None, :] * np.abs(amps) ** 2


def _tight_slack(eh_list, received):
    k, j = received.shape
    z = np.empty((k, j))
    for i, p in enumerate(eh_list):
        z[i] = np.exp(-p.a * (received[i] - p.b))
    return np.maximum(z, _TINY)


def _relaxed_per_er(eh_list, received, durations):
    k = received.shape[0]
    out = np.empty(k)
    for i, p in enumerate(eh_list):
        out[i] = float(durations @ dc_power(p, received[i]))
    return out


def audited_objective(per_er, weights):
    """min_k per_er_k / alpha_k over the positively weighted ERs."""
    vals = [per_er[k] / a for k, a in enumerate(weights) if a > 0]
    return min(vals)


def audit_schedule(schedule: Schedule, ch, eh, cfg):
    """Per-ER harvested energies of a unit-modulus schedule under the exact
    harvest model."""
    eh_list = per_er(eh, ch.n_ers)
    out = np.zeros(ch.n_ers)
    for j in range(schedule.n_slots):
        if schedule.durations[j] <= 0:
            continue
        for k in range(ch.n_ers):
            p_recv = received_rf_power(ch, k, schedule.phases[j], schedule.powers[j])
            out[k] += schedule.durations[j] * dc_power(eh_list[k], p_recv)
    return out


def _audit_iterate(ch, eh_list, cfg, theta_bar, durations, powers):
    received = _relaxed_received(ch, theta_bar, powers)
    per = _relaxed_per_er(eh_list, received, durations)
    return audited_objective(per, cfg.fairness_weights), received


def initialize(ch: ChannelRealization, eh, cfg: SystemConfig, j_slots, strategy="tdma-warm",
               seed=None) -> ScaIterate:
    """Feasible starting iterate.

    tdma-warm points each slot at one ER with a matched-phase pattern. Slots
    go to the ERs needing the most transmit effort per unit objective
    (weight over aligned channel power), cycled when there are more slots
    than ERs and ordered by ER index; durations split the horizon evenly and
    every slot transmits at min(P_max, E_tot/T). The slack starts exactly
    tight and e is the audited objective of the point itself.
    """
    if j_slots < 1:
        raise ValueError("at least one slot is required")
    from .tdma import matched_phase  # deferred: tdma reuses this module's types

    eh_list = per_er(eh, ch.n_ers)
    n, k = ch.n_elements, ch.n_ers
    if strategy == "tdma-warm":
        w = cfg.weights
        aligned = np.array([np.abs(ch.h_d[i]) + np.sum(np.abs(ch.q[i])) for i in range(k)])
        need = w / np.maximum(aligned, _TINY) ** 2
        if j_slots <= k:
            chosen = sorted(np.argsort(-need)[:j_slots].tolist())
        else:
            chosen = [i % k for i in range(j_slots)]
        phases = np.stack([matched_phase(ch, i) for i in chosen])
    elif strategy == "random":
        rng = np.random.Generator(np.random.Philox(0 if seed is None else int(seed)))
        phases = np.exp(2j * np.pi * rng.random((j_slots, n)))
    else:
        raise ValueError(f"unknown initialization strategy {strategy!r}")

    durations = np.full(j_slots, cfg.horizon / j_slots)
    powers = np.full(j_slots, min(cfg.max_power, cfg.total_energy / cfg.horizon))
    direct = np.ones(j_slots, dtype=complex)
    theta_bar = np.concatenate([phases, direct[:, None]], axis=1)
    e0, received = _audit_iterate(ch, eh_list, cfg, theta_bar, durations, powers)
    slack = _tight_slack(eh_list, received)
    sched = Schedule(phases=phases, durations=durations, powers=powers)
    return ScaIterate(schedule=sched, slack=slack, e=e0, iteration=0, direct_coeff=direct)


def initialize_from_lift(ch: ChannelRealization, eh, cfg: SystemConfig, theta_lift,
                         j_slots) -> ScaIterate:
    """Feasible starting iterate seeded from a relaxed static solution.

    Each slot takes the unit-modulus projection of one of the top j_slots
    eigenvectors of theta_lift (rotated so the reference entry is real
    positive); durations split the horizon in proportion to the matching
    eigenvalues and every slot transmits at min(P_max, E_tot/T). When the lift
    has fewer significant eigenvalues than slots the surplus slots get sliver
    durations and are left for the resource step to reclaim.
    """
    if j_slots < 1:
        raise ValueError("at least one slot is required")
    eh_list = per_er(eh, ch.n_ers)
    n1 = ch.n_elements + 1
    theta_lift = np.asarray(theta_lift, dtype=complex)
    if theta_lift.shape != (n1, n1):
        raise ValueError(f"theta_lift must have shape {(n1, n1)}, got {theta_lift.shape}")
    vals, vecs = np.linalg.eigh(theta_lift)
    order = np.argsort(vals)[::-1][:j_slots]
    lam = np.clip(vals[order], 1e-12, None)
    phases = np.stack([reconstruct_pattern(vecs[:, col]) for col in order])
    durations = cfg.horizon * lam / float(np.sum(lam))
    powers = np.full(j_slots, min(cfg.max_power, cfg.total_energy / cfg.horizon))
    direct = np.ones(j_slots, dtype=complex)
    theta_bar = np.concatenate([phases, direct[:, None]], axis=1)
    e0, received = _audit_iterate(ch, eh_list, cfg, theta_bar, durations, powers)
    slack = _tight_slack(eh_list, received)
    sched = Schedule(phases=phases, durations=durations, powers=powers)
    return ScaIterate(schedule=sched, slack=slack, e=e0, iteration=0, direct_coeff=direct)


def _f_lb_terms(x_k, z_r_row, tau_r, s_var, z_var_row):
    # sum_j X f_lb(z_kj, tau_j) with f_lb affine in (s_j, z_kj)
    s_r = np.sqrt(tau_r)
    c0 = tau_r / (1.0 + z_r_row)
    c_s = 2.0 * s_r / (1.0 + z_r_row)
    c_z = tau_r / (1.0 + z_r_row) ** 2
    return x_k * (cp.sum(cp.multiply(c_s, s_var)) + float(np.sum(c0 - c_s * s_r))
                  - cp.sum(cp.multiply(c_z, z_var_row)) + float(np.sum(c_z * z_r_row)))


def build_subproblem(it: ScaIterate, ch, eh, cfg, freeze_resources=False):
    """Conic program of one SCA step around the iterate `it`.

    Returns (program, handles) where handles maps variable roles to cvxpy
    objects. With freeze_resources the durations and powers stay at the
    iterate's values and only the patterns, slacks, and objective move: that
    restriction is the single-pattern baseline when J = 1.
    """
    eh_list = per_er(eh, ch.n_ers)
    k, j = ch.n_ers, it.schedule.n_slots
    n1 = ch.n_elements + 1
    active = [i for i in range(k) if cfg.fairness_weights[i] > 0]
    theta_bar_r = it.theta_bar()
    tau_r = np.maximum(it.schedule.durations, 0.0)
    p_r = np.maximum(it.schedule.powers, 1e-12 * cfg.max_power)
    z_r = it.slack

    prog = ConicProgram("sca-step" if not freeze_resources else "sca-step-frozen")
    e = prog.real_scalar("e")
    theta = prog.complex_matrix("theta", (n1, j))
    z = prog.real_matrix("z", (len(active), j), nonneg=True)
    if freeze_resources:
        tau_expr, s_expr, p_expr, w_expr = tau_r, np.sqrt(tau_r), p_r, 1.0 / p_r
    else:
        tau_expr = prog.real_vector("tau", j, nonneg=True)
        s_expr = prog.real_vector("s", j, nonneg=True)
        p_expr = prog.real_vector("p", j, nonneg=True)
        w_expr = prog.real_vector("w", j, nonneg=True)
        prog.add("sqrt-link", cp.square(s_expr) <= tau_expr)
        prog.add("inv-power-link", cp.inv_pos(p_expr) <= w_expr)
        prog.add("time", cp.sum(tau_expr) <= cfg.horizon)
        prog.add("power-cap", p_expr <= cfg.max_power)
        # eta_ub as a cvxpy expression: -(d_r)^2 - 2 d_r ((p - p_r) - (tau - tau_r))
        d_r = p_r - tau_r
        eta_expr = -d_r ** 2 - 2.0 * cp.multiply(d_r, (p_expr - p_r) - (tau_expr - tau_r))
        prog.add("energy", 0.25 * cp.sum(cp.square(p_expr + tau_expr) + eta_expr)
                 <= cfg.total_energy)
    prog.add("modulus", cp.abs(theta) <= 1.0)

    for row, kk in enumerate(active):
        prm = eh_list[kk]
        x_k, y_k = prm.x, prm.y
        if freeze_resources:
            c0 = tau_r / (1.0 + z_r[kk])
            c_z = tau_r / (1.0 + z_r[kk]) ** 2
            harvest = x_k * (float(np.sum(c0 + c_z * z_r[kk])) - cp.sum(cp.multiply(c_z, z[row])))
        else:
            harvest = _f_lb_terms(x_k, z_r[kk], tau_r, s_expr, z[row])
        total = harvest - y_k * (float(np.sum(tau_r)) if freeze_resources else cp.sum(tau_expr))
        prog.add(f"fairness-{kk}", total >= cfg.fairness_weights[kk] * e)
        for jj in range(j):
            ref = ch.q_lift[kk] @ theta_bar_r[jj]
            t_r = float(np.real(np.vdot(theta_bar_r[jj], ref)))
            cross = cp.real(cp.conj(ref) @ theta[:, jj])
            if freeze_resources:
                g_lb = 2.0 * p_r[jj] * cross - p_r[jj] * t_r
            else:
                g_lb = (2.0 * p_r[jj] * cross - p_r[jj] * t_r
                        - p_r[jj] ** 2 * t_r * (w_expr[jj] - 1.0 / p_r[jj]))
            prog.add(f"rf-{kk}-{jj}", cp.log(z[row, jj]) >= prm.a * (prm.b - g_lb))

    prog.maximize(e)
    handles = {"e": e, "theta": theta, "z": z, "active": active}
    if not freeze_resources:
        handles.update(tau=tau_expr, s=s_expr, p=p_expr, w=w_expr)
    return prog, handles


def solve_sca_subproblem(it: ScaIterate, ch, eh, cfg, freeze_resources=False) -> ScaIterate:
    """One SCA step: solve the convex subproblem at `it`, re-tighten the
    slack at the returned point, and audit its objective exactly.

    On solver failure the input iterate comes back flagged non-improving.
    """
    eh_list = per_er(eh, ch.n_ers)
    prog, handles = build_subproblem(it, ch, eh_list, cfg, freeze_resources)
    sol = conic.solve(prog, tol=1e-6)
    if sol.status != conic.OPTIMAL:
        return replace(it, iteration=it.iteration + 1, improving=False)

    theta = np.asarray(sol.values["theta"])
    theta_bar = theta.T.copy()                      # (J, N+1)
    j = it.schedule.n_slots
    if freeze_resources:
        tau = it.schedule.durations.copy()
        p = it.schedule.powers.copy()
    else:
        tau = np.clip(np.asarray(sol.values["tau"]).reshape(j), 0.0, None)
        p = np.clip(np.asarray(sol.values["p"]).reshape(j), 0.0, cfg.max_power)
        total_tau = float(np.sum(tau))
        if total_tau > cfg.horizon:
            tau *= cfg.horizon / total_tau
        spent = float(p @ tau)
        if spent > cfg.total_energy:
            tau *= cfg.total_energy / spent

    e_aud, received = _audit_iterate(ch, eh_list, cfg, theta_bar, tau, p)
    if e_aud < it.e - 1e-6 * max(abs(it.e), _TINY):
        # the ascent contract failed beyond solver noise; keep the input point
        return replace(it, iteration=it.iteration + 1, improving=False)
    slack = _tight_slack(eh_list, received)
    sched = Schedule(phases=theta_bar[:, :-1], durations=tau, powers=p)
    return ScaIterate(schedule=sched, slack=slack, e=e_aud,
                      iteration=it.iteration + 1,
                      direct_coeff=theta_bar[:, -1].copy(), improving=True)


def build_resource_subproblem(t_fixed, it_tau, it_p, slack_r, eh_list, cfg):
    """Resource-only SCA step used when every slot's pattern is already fixed:
    the received power P_j t_kj is exactly linear in P_j, so only f_lb and
    eta_ub surrogates remain and the patterns contribute no variables."""
    k_active, j = slack_r.shape
    tau_r = np.maximum(it_tau, 0.0)
    p_r = np.maximum(it_p, 1e-12 * cfg.max_power)
    active = [i for i in range(len(cfg.fairness_weights)) if cfg.fairness_weights[i] > 0]

    prog = ConicProgram("resource-step")
    e = prog.real_scalar("e")
    tau = prog.real_vector("tau", j, nonneg=True)
    s = prog.real_vector("s", j, nonneg=True)
    p = prog.real_vector("p", j, nonneg=True)
    z = prog.real_matrix("z", (k_active, j), nonneg=True)
    prog.add("sqrt-link", cp.square(s) <= tau)
    prog.add("time", cp.sum(tau) <= cfg.horizon)
    prog.add("power-cap", p <= cfg.max_power)
    d_r = p_r - tau_r
    eta_expr = -d_r ** 2 - 2.0 * cp.multiply(d_r, (p - p_r) - (tau - tau_r))
    prog.add("energy", 0.25 * cp.sum(cp.square(p + tau) + eta_expr) <= cfg.total_energy)
    for row, kk in enumerate(active):
        prm = eh_list[kk]
        harvest = _f_lb_terms(prm.x, slack_r[row], tau_r, s, z[row])
        prog.add(f"fairness-{kk}", harvest - prm.y * cp.sum(tau)
                 >= cfg.fairness_weights[kk] * e)
        for jj in range(j):
            prog.add(f"rf-{kk}-{jj}",
                     cp.log(z[row, jj]) >= prm.a * (prm.b - t_fixed[kk, jj] * p[jj]))
    prog.maximize(e)
    return prog, {"e": e, "tau": tau, "p": p, "z": z, "active": active}


def _resource_sca(phases, tau0, p0, ch, eh_list, cfg, max_iter=100):
    """Iterate the resource-only subproblem to convergence for fixed patterns.
    Returns (durations, powers, audited_e, per_er, history, converged)."""
    j = phases.shape[0]
    theta_bar = np.concatenate([phases, np.ones((j, 1))], axis=1)
    t_fixed = np.abs(ch.q_bar.conj() @ theta_bar.T) ** 2      # (K, J) per-watt powers
    active = [i for i in range(ch.n_ers) if cfg.fairness_weights[i] > 0]

    tau, p = tau0.copy(), p0.copy()
    received = t_fixed * p[None, :]
    per = _relaxed_per_er(eh_list, received, tau)
    e_prev = audited_objective(per, cfg.fairness_weights)
    history = [e_prev]
    converged = False
    for _ in range(max_iter):
        slack_r = _tight_slack(eh_list, received)[active, :]
        prog, _ = build_resource_subproblem(t_fixed, tau, p, slack_r, eh_list, cfg)
        sol = conic.solve(prog, tol=1e-6)
        if sol.status != conic.OPTIMAL:
            break
        tau_new = np.clip(np.asarray(sol.values["tau"]).reshape(j), 0.0, None)
        p_new = np.clip(np.asarray(sol.values["p"]).reshape(j), 0.0, cfg.max_power)
        total_tau = float(np.sum(tau_new))
        if total_tau > cfg.horizon:
            tau_new *= cfg.horizon / total_tau
        spent = float(p_new @ tau_new)
        if spent > cfg.total_energy:
            tau_new *= cfg.total_energy / spent
        received_new = t_fixed * p_new[None, :]
        per_new = _relaxed_per_er(eh_list, received_new, tau_new)
        e_new = audited_objective(per_new, cfg.fairness_weights)
        rel = (e_new - e_prev) / max(abs(e_prev), _TINY)
        if e_new < e_prev:
            # surrogate gain did not survive the exact audit; a re-solve at
            # the unchanged point would only repeat itself
            history.append(e_prev)
            break
        tau, p, received, per = tau_new, p_new, received_new, per_new
        e_prev = e_new
        history.append(e_prev)
        if rel < cfg.sca_tol:
            converged = True
            break
    return tau, p, e_prev, per, history, converged


def _prune(schedule: Schedule, cfg):
    keep = schedule.durations >= 1e-9 * cfg.horizon
    if not np.any(keep):
        keep[int(np.argmax(schedule.durations))] = True
    return Schedule(phases=schedule.phases[keep], durations=schedule.durations[keep],
                    powers=schedule.powers[keep])


def solve_dynamic(ch: ChannelRealization, eh, cfg: SystemConfig, j_slots,
                  strategy="tdma-warm", seed=None, freeze_resources=False,
                  warm_start: ScaIterate = None, extra_candidates=()) -> Solution:
    """Full dynamic solve: initialize, SCA to convergence, project the
    patterns, re-optimize the resources once with patterns frozen, audit.

    Every unit-modulus point met along the way (the initial iterate, the
    per-iteration projections, the final re-optimized schedule, plus any
    caller-supplied candidate solutions) is audited under the exact harvest
    model, and the best audited point is returned. With freeze_resources the
    durations and powers stay at the initializer's full-horizon values and
    J = 1 gives the single-pattern baseline.
    """
    eh_list = per_er(eh, ch.n_ers)
    it = warm_start if warm_start is not None else initialize(
        ch, eh_list, cfg, j_slots, strategy=strategy, seed=seed)
    used_strategy = "warm-start" if warm_start is not None else strategy
    history = [it.e]

    def project_and_audit(iterate):
        phases = np.stack([reconstruct_pattern(row) for row in iterate.theta_bar()])
        sched = Schedule(phases=phases, durations=iterate.schedule.durations.copy(),
                         powers=iterate.schedule.powers.copy())
        per = audit_schedule(sched, ch, eh_list, cfg)
        return sched, per, audited_objective(per, cfg.fairness_weights)

    best_sched, best_per, best_e = project_and_audit(it)
    converged = False
    for _ in range(100):
        nxt = solve_sca_subproblem(it, ch, eh_list, cfg, freeze_resources=freeze_resources)
        if not nxt.improving:
            break
        rel = (nxt.e - it.e) / max(abs(it.e), _TINY)
        it = nxt
        history.append(it.e)
        sched_p, per_p, e_p = project_and_audit(it)
        if e_p > best_e:
            best_sched, best_per, best_e = sched_p, per_p, e_p
        if rel < cfg.sca_tol:
            converged = True
            break

    candidates = list(extra_candidates)
    if (j_slots == ch.n_ers and not freeze_resources and warm_start is None
            and strategy == "tdma-warm"):
        # at J = K the one-slot-per-ER schedule is feasible for this problem,
        # so the warm-started run must never land below it
        from .tdma import solve_tdma
        candidates.append(solve_tdma(ch, eh_list, cfg))
    for cand in candidates:
        per = audit_schedule(cand.schedule, ch, eh_list, cfg)  # never trust unaudited
        e_c = audited_objective(per, cfg.fairness_weights)
        if e_c > best_e:
            best_sched, best_per, best_e = cand.schedule, per, e_c

    if not freeze_resources:
        tau, p, _, _, _, _ = _resource_sca(best_sched.phases, best_sched.durations,
                                           best_sched.powers, ch, eh_list, cfg)
        resched = Schedule(phases=best_sched.phases, durations=tau, powers=p)
        per = audit_schedule(resched, ch, eh_list, cfg)
        e_re = audited_objective(per, cfg.fairness_weights)
        if e_re > best_e:
            best_sched, best_per, best_e = resched, per, e_re

    final = _prune(best_sched, cfg)
    if final.n_slots != best_sched.n_slots:
        best_per = audit_schedule(final, ch, eh_list, cfg)
        best_e = audited_objective(best_per, cfg.fairness_weights)
    final.validate(cfg)
    return Solution(e=best_e, per_er_energy=best_per, schedule=final,
                    iterations=len(history) - 1, converged=converged,
                    e_history=history, init_strategy=used_strategy)


def warm_start_from(sol: Solution, j_new, ch, eh, cfg, eps_frac=1e-3) -> ScaIterate:
    """Embed a J-slot solution as a starting iterate with j_new >= J slots.

    New slots need a sliver of duration to participate (a slot expanded at
    zero duration has an identically zero harvest surrogate and never grows),
    so eps_frac of the horizon is shaved proportionally off the old slots and
    each new slot starts there with the matched phase of the worst-served ER.
    """
    eh_list = per_er(eh, ch.n_ers)
    j_old = sol.schedule.n_slots
    if j_new < j_old:
        raise ValueError("cannot embed into fewer slots")
    from .tdma import matched_phase

    phases = [row for row in sol.schedule.phases]
    tau = list(sol.schedule.durations)
    p = list(sol.schedule.powers)
    extra = j_new - j_old
    if extra > 0:
        ratios = sol.per_er_energy / np.maximum(cfg.weights, _TINY)
        ratios[cfg.weights == 0] = np.inf
        worst = int(np.argmin(ratios))
        eps = eps_frac * cfg.horizon
        used = float(np.sum(tau))
        free = cfg.horizon - used
        if extra * eps > free:
            # shave the shortfall proportionally off the old slots
            shave = 1.0 - (extra * eps - free) / max(used, _TINY)
            shave = max(shave, 0.0)
            tau = [t * shave for t in tau]
        p_new = min(cfg.max_power, cfg.total_energy / cfg.horizon)
        for _ in range(extra):
            phases.append(matched_phase(ch, worst))
            tau.append(eps)
            p.append(p_new)
    phases = np.stack(phases)
    tau = np.asarray(tau, dtype=float)
    p = np.asarray(p, dtype=float)
    spent = float(p @ tau)
    if spent > cfg.total_energy:
        tau *= cfg.total_energy / spent
    theta_bar = np.concatenate([phases, np.ones((j_new, 1))], axis=1)
    e0, received = _audit_iterate(ch, eh_list, cfg, theta_bar, tau, p)
    slack = _tight_slack(eh_list, received)
    sched = Schedule(phases=phases, durations=tau, powers=p)
    return ScaIterate(schedule=sched, slack=slack, e=e0, iteration=0,
                      direct_coeff=np.ones(j_new, dtype=complex))
