"""Static single-pattern scheme: SDR upper bound, rank profiling, Gaussian
randomization.

The upper bound comes from bisection over the fairness objective e. Each
trial e asks whether a unit-diagonal PSD matrix Theta exists with
P tr(Qbar_k Theta) >= r_k(e) for all k. Rather than solving that feasibility
SDP directly (an (N+1)x(N+1) matrix variable), the trial solves its compact
dual margin program over N+1+K scalars,

    minimize  sum(w) - y.r   s.t.  Diag(w) >= sum_k y_k P Qbar_k,  y >= 0,
                                   sum(y) = 1,

whose optimal value equals the best achievable margin min_k {P tr(Qbar_k
Theta) - r_k}; the trial is feasible iff that value is >= 0, and the primal
witness Theta is recovered from the semidefinite constraint's dual matrix.
`feasibility_program` exposes the direct primal form so the two routes can be
cross-checked on small instances.

Problem data is rescaled by 1/(P max_k tr(Qbar_k)) before solving: channel
powers sit around 1e-7 W, far below interior-point feasibility tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import conic
from .channel import ChannelRealization, SystemConfig, aligned_amplitude, received_rf_power
from .conic import ConicProgram, SolverFailureError
from .eh import dc_power, per_er, required_rf_power

__all__ = [
    "SdrResult",
    "solve_sdr_upper_bound",
    "rank_profile",
    "gaussian_randomization",
    "feasibility_program",
    "achieved_static_e",
    "static_transmit_power",
]


@dataclass(frozen=True)
class SdrResult:
    e_upper: float                # joules, relaxed optimum
    theta_lift: np.ndarray        # (N+1, N+1) Hermitian PSD, unit diagonal
    eigenvalues: np.ndarray       # descending, clamped nonnegative
    rank_estimate: int
    bisection_iterations: int


def static_transmit_power(cfg: SystemConfig):
    """Transmit power of the single-pattern schemes: full-horizon spend
    E_tot/T, capped at P_max for configs where that budget is not reachable."""
    return min(cfg.total_energy / cfg.horizon, cfg.max_power)


def achieved_static_e(ch, eh, cfg, theta, p_t=None):
    """Fairness objective min_k T dc_power(received_k)/alpha_k for one fixed
    pattern held over the whole horizon. ERs with zero weight are skipped."""
    eh_list = per_er(eh, ch.n_ers)
    p_t = static_transmit_power(cfg) if p_t is None else p_t
    best = math.inf
    for k, alpha in enumerate(cfg.fairness_weights):
        if alpha == 0:
            continue
        e_k = cfg.horizon * dc_power(eh_list[k], received_rf_power(ch, k, theta, p_t)) / alpha
        best = min(best, e_k)
    return best


def _saturation_cap(eh_list, cfg):
    # e with alpha_k e / T = m_k is unreachable: the harvester saturates below m
    return min(cfg.horizon * eh_list[k].m / a
               for k, a in enumerate(cfg.fairness_weights) if a > 0)


def _alignment_cap(ch, eh_list, cfg, p_t):
    # |Theta_ij| <= sqrt(Theta_ii Theta_jj) = 1, so tr(Qbar_k Theta) can never
    # exceed (sum_i |qbar_k_i|)^2 and any feasible e obeys this per-ER ceiling
    best = math.inf
    for k, alpha in enumerate(cfg.fairness_weights):
        if alpha == 0:
            continue
        p_best = p_t * aligned_amplitude(ch, k) ** 2
        best = min(best, cfg.horizon * dc_power(eh_list[k], p_best) / alpha)
    return best


def feasibility_program(ch, eh, cfg, trial_e, p_t=None) -> ConicProgram:
    """Direct primal form of one bisection trial: does a unit-diagonal PSD
    Theta deliver required RF power to every weighted ER at objective level
    trial_e? Used for cross-checking the margin route on small instances."""
    eh_list = per_er(eh, ch.n_ers)
    p_t = static_transmit_power(cfg) if p_t is None else p_t
    n1 = ch.n_elements + 1
    scale = 1.0 / (p_t * max(np.trace(q).real for q in ch.q_lift))
    prog = ConicProgram("sdr-trial-primal")
    theta = prog.hermitian("theta", n1)
    prog.add("psd", theta >> 0)
    prog.add("unit-diag", cp.diag(theta) == 1.0)
    for k, alpha in enumerate(cfg.fairness_weights):
        if alpha == 0:
            continue
        r_k = scale * required_rf_power(eh_list[k], alpha * trial_e / cfg.horizon)
        a_k = scale * p_t * ch.q_lift[k]
        prog.add(f"power-{k}", cp.real(cp.trace(a_k @ theta)) >= r_k)
    return prog


class _MarginProgram:
    """The compact dual of one bisection trial, built once per realization;
    only the K requirement levels change between trials."""

    def __init__(self, ch, eh_list, cfg, p_t):
        self.eh_list = eh_list
        self.cfg = cfg
        self.p_t = p_t
        self.active = [k for k, a in enumerate(cfg.fairness_weights) if a > 0]
        n1 = ch.n_elements + 1
        self.scale = 1.0 / (p_t * max(np.trace(q).real for q in ch.q_lift))
        q_flat = (self.scale * p_t) * ch.q_lift[self.active].reshape(len(self.active), n1 * n1)
        prog = ConicProgram("sdr-trial-margin")
        w = prog.real_vector("w", n1)
        y = prog.real_vector("y", len(self.active), nonneg=True)
        self.r = prog.parameter("r", len(self.active))
        acc = cp.reshape(y @ q_flat, (n1, n1), order="C")
        self.lmi = prog.add("lmi", cp.diag(w) - acc >> 0)
        prog.add("mix", cp.sum(y) == 1.0)
        # maximize y.r - sum(w) = -(margin); trial feasible iff value <= 0
        prog.maximize(y @ self.r - cp.sum(w))
        self.prog = prog

    def solve(self, trial_e):
        """Returns (feasible, witness_or_None) for one trial level."""
        cfg, eh_list = self.cfg, self.eh_list
        self.r.value = np.array([
            self.scale * required_rf_power(eh_list[k], cfg.fairness_weights[k] * trial_e / cfg.horizon)
            for k in self.active])
        sol = conic.solve(self.prog, tol=1e-6)
        if sol.status != conic.OPTIMAL:
            raise SolverFailureError(
                f"margin program failed at trial e={trial_e!r}: {sol.message or sol.status}")
        feasible = sol.objective_value <= 0.0
        witness = sol.duals.get("lmi")
        return feasible, witness


def _normalize_witness(witness):
    # the LMI dual is the primal Theta up to a uniform scale left over from
    # the real embedding; restoring the unit diagonal removes it
    theta = np.asarray(witness, dtype=complex)
    theta = 0.5 * (theta + theta.conj().T)
    d = np.diag(theta).real.copy()
    if np.min(d) <= 1e-12 * max(np.max(d), 1e-300):
        raise SolverFailureError("degenerate witness: nonpositive diagonal in LMI dual")
    return theta / np.sqrt(np.outer(d, d))


def _spectrum(theta_lift):
    vals = np.linalg.eigvalsh(theta_lift)[::-1].copy()
    # gate relative to the top eigenvalue: unit-diagonal witnesses have
    # vals[0] in [1, N+1], so this tracks the matrix's own scale
    if vals[-1] < -1e-6 * max(vals[0], 1e-12):
        raise SolverFailureError(
            f"witness eigenvalue {vals[-1]:.3e} below -1e-6 of top {vals[0]:.3e}")
    return np.clip(vals, 0.0, None)


def _primal_recovery(ch, eh_list, cfg, p_t, level):
    """Recover Theta by solving the direct primal at the certified level with
    a maximized common slack. Used when the margin program's dual matrix comes
    back too inaccurate to certify; the primal route costs one full-size SDP
    but its Theta is a solver-projected PSD variable rather than a dual."""
    n1 = ch.n_elements + 1
    scale = 1.0 / (p_t * max(np.trace(q).real for q in ch.q_lift))
    prog = ConicProgram("sdr-witness-primal")
    theta = prog.hermitian("theta", n1)
    slack = prog.real_scalar("slack")
    prog.add("psd", theta >> 0)
    prog.add("unit-diag", cp.diag(theta) == 1.0)
    for k, alpha in enumerate(cfg.fairness_weights):
        if alpha == 0:
            continue
        r_k = scale * required_rf_power(eh_list[k], alpha * level / cfg.horizon)
        a_k = scale * p_t * ch.q_lift[k]
        prog.add(f"power-{k}", cp.real(cp.trace(a_k @ theta)) >= r_k + slack)
    prog.maximize(slack)
    sol = conic.solve(prog, tol=1e-6)
    if sol.status != conic.OPTIMAL:
        raise SolverFailureError(
            f"primal witness recovery failed at e={level!r}: {sol.message or sol.status}")
    return np.asarray(sol.values["theta"], dtype=complex)


def solve_sdr_upper_bound(ch: ChannelRealization, eh, cfg: SystemConfig) -> SdrResult:
    """Bisection over e with the margin-program feasibility check per trial.

    The bracket starts at [0, min(saturation cap, phase-alignment cap)] and
    shrinks until its width falls below 1e-6 of the answer's own scale, so
    small harvested energies are still resolved to six significant figures.
    """
    eh_list = per_er(eh, ch.n_ers)
    p_t = static_transmit_power(cfg)
    e_sat = _saturation_cap(eh_list, cfg)
    hi = min(e_sat * (1.0 - 1e-12), _alignment_cap(ch, eh_list, cfg, p_t))
    lo = 0.0
    margin = _MarginProgram(ch, eh_list, cfg, p_t)
    iterations = 0
    # floor keeps the loop finite when the optimum is indistinguishable from 0
    while hi - lo > 1e-6 * max(lo, 1e-9 * e_sat) and iterations < 80:
        mid = 0.5 * (lo + hi)
        feasible, _ = margin.solve(mid)
        if feasible:
            lo = mid
        else:
            hi = mid
        iterations += 1
    _, witness = margin.solve(lo)  # consistent witness at the reported level
    try:
        theta_lift = _normalize_witness(witness)
        eigenvalues = _spectrum(theta_lift)
    except SolverFailureError:
        theta_lift = _normalize_witness(_primal_recovery(ch, eh_list, cfg, p_t, lo))
        eigenvalues = _spectrum(theta_lift)
    rank, _ = rank_profile_from_spectrum(eigenvalues, cfg.rank_threshold)
    return SdrResult(e_upper=lo, theta_lift=theta_lift, eigenvalues=eigenvalues,
                     rank_estimate=rank, bisection_iterations=iterations)


def rank_profile_from_spectrum(eigenvalues, threshold):
    vals = np.asarray(eigenvalues, dtype=float)
    rank = int(np.sum(vals > threshold * vals.max()))
    return rank, vals


def rank_profile(result: SdrResult, threshold):
    """Eigenvalue-threshold rank: count of eigenvalues above threshold x max."""
    spectrum = _spectrum(result.theta_lift)
    return rank_profile_from_spectrum(spectrum, threshold)


def gaussian_randomization(result: SdrResult, ch, eh, cfg, n_samples=1000, seed=0):
    """Recover a unit-modulus pattern from the relaxed Theta.

    Candidates are U sqrt(Sigma) r with r standard complex Gaussian, rotated so
    the reference entry is real positive, projected entrywise to unit modulus.
    Samples are drawn from one stream, so larger n_samples with the same seed
    extends (never replaces) the candidate set.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    eh_list = per_er(eh, ch.n_ers)
    p_t = static_transmit_power(cfg)
    vals, vecs = np.linalg.eigh(result.theta_lift)
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))[None, :]
    rng = np.random.Generator(np.random.Philox(int(seed)))
    n1 = root.shape[0]
    best_theta, best_e = None, -math.inf
    for _ in range(n_samples):
        r = (rng.standard_normal(n1) + 1j * rng.standard_normal(n1)) / np.sqrt(2.0)
        cand = root @ r
        ref = cand[-1]
        if abs(ref) > 0:
            cand = cand * (ref.conjugate() / abs(ref))
        mags = np.abs(cand)
        cand = np.where(mags > 0, cand / np.where(mags > 0, mags, 1.0), 1.0)
        theta = cand[:-1]
        e = achieved_static_e(ch, eh_list, cfg, theta, p_t)
        if e > best_e:
            best_theta, best_e = theta, e
    return best_theta, best_e
