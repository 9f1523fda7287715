"""Conic subproblem layer: a validated program container plus solver routing.

Every scheme expresses its convex subproblems through `ConicProgram`: named
variables, an affine objective to maximize, and named constraints drawn from
the cone families {affine equality, affine inequality, SOC, rotated SOC, PSD,
exponential}. Rotated cones enter through DCP atoms (`quad_over_lin`, `square`,
`sqrt`, `power`) and exponential cones through `log`; the lowering to the
standard cones, including the real symmetric embedding of Hermitian PSD
constraints, is delegated to cvxpy's canonicalization, which is exercised by
this module's test suite rather than reimplemented.

Solver routing: programs with PSD constraints go to CVXOPT first (orders of
magnitude faster than the alternatives on the small dense LMIs this package
produces), everything else to Clarabel, with SCS as the common fallback. A
reported optimum is demoted to numerical-failure when the returned point
violates any constraint by more than the caller's tolerance; callers never
trust an unchecked witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

__all__ = ["ConicProgram", "ConicSolution", "SolverFailureError", "solve", "check_feasibility"]


class SolverFailureError(RuntimeError):
    """A subproblem ended in numerical failure; the message carries context."""

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

_EXP_ATOMS = {"log", "exp", "entr", "kl_div", "rel_entr", "logistic", "log_sum_exp"}

_SOLVER_OPTIONS = {
    "SCS": {"eps_abs": 1e-8, "eps_rel": 1e-8, "max_iters": 100_000},
}


class ConicProgram:
    """Container for one convex subproblem: declared variables, affine
    objective (maximized), and named constraints."""

    def __init__(self, name="program"):
        self.name = name
        self._vars = {}
        self._params = {}
        self._cons = []
        self._objective = None
        self._built = {}

    def _declare(self, name, var):
        if self._built:
            raise RuntimeError("program already built; declare everything before solving")
        if name in self._vars or name in self._params:
            raise ValueError(f"variable {name!r} already declared")
        self._vars[name] = var
        return var

    def parameter(self, name, shape=()):
        """Declare a data parameter; its value may change between solves
        without re-canonicalizing the program."""
        if self._built:
            raise RuntimeError("program already built; declare everything before solving")
        if name in self._vars or name in self._params:
            raise ValueError(f"parameter {name!r} already declared")
        p = cp.Parameter(shape, name=name)
        self._params[name] = p
        return p

    def real_scalar(self, name, nonneg=False):
        return self._declare(name, cp.Variable(name=name, nonneg=nonneg))

    def real_vector(self, name, n, nonneg=False):
        return self._declare(name, cp.Variable(int(n), name=name, nonneg=nonneg))

    def real_matrix(self, name, shape, nonneg=False):
        return self._declare(name, cp.Variable(tuple(shape), name=name, nonneg=nonneg))

    def complex_vector(self, name, n):
        # sugar for a pair of real vectors; canonicalization stores exactly that
        return self._declare(name, cp.Variable(int(n), name=name, complex=True))

    def complex_matrix(self, name, shape):
        return self._declare(name, cp.Variable(tuple(shape), name=name, complex=True))

    def hermitian(self, name, n):
        return self._declare(name, cp.Variable((int(n), int(n)), name=name, hermitian=True))

    def maximize(self, expr):
        expr = cp.Expression.cast_to_const(expr)
        if not expr.is_affine():
            raise ValueError("objective must be an affine functional of the variables")
        self._objective = expr

    def add(self, name, constraint):
        """Attach a named DCP constraint referencing only declared variables."""
        if self._built:
            raise RuntimeError("program already built; declare everything before solving")
        if not isinstance(constraint, cp.constraints.constraint.Constraint):
            raise TypeError(f"constraint {name!r} is not a cvxpy constraint")
        if not constraint.is_dcp():
            raise ValueError(f"constraint {name!r} is not DCP-representable")
        declared = {id(v) for v in self._vars.values()}
        for v in constraint.variables():
            if id(v) not in declared:
                raise ValueError(f"constraint {name!r} references undeclared variable {v.name()!r}")
        if any(cname == str(name) for cname, _ in self._cons):
            raise ValueError(f"constraint {name!r} already added")
        self._cons.append((str(name), constraint))
        return constraint

    def constraint(self, name):
        for cname, con in self._cons:
            if cname == name:
                return con
        raise KeyError(name)

    @property
    def num_scalar_variables(self):
        """Real scalar count after embedding (complex entries count twice)."""
        total = 0
        for v in self._vars.values():
            n = int(np.prod(v.shape)) if v.shape else 1
            if v.is_complex():
                n *= 2
            total += n
        return total

    def build(self, feasibility=False):
        # cached per mode so repeated solves with new parameter values reuse
        # the canonicalized form
        key = bool(feasibility)
        if key not in self._built:
            obj = self._objective
            if feasibility or obj is None:
                obj = cp.Constant(0.0)
            self._built[key] = cp.Problem(cp.Maximize(obj), [c for _, c in self._cons])
        return self._built[key]

    def dump(self, path):
        """Write a plain-text rendering of the program for offline inspection."""
        lines = [f"program {self.name}", "variables:"]
        for name, v in self._vars.items():
            kind = "hermitian" if v.is_hermitian() else ("complex" if v.is_complex() else "real")
            lines.append(f"  {name}: shape={v.shape or '()'} {kind}")
        for name, p in self._params.items():
            lines.append(f"  {name}: shape={p.shape or '()'} parameter")
        lines.append(f"objective: maximize {self._objective}")
        lines.append("constraints:")
        for name, c in self._cons:
            lines.append(f"  {name}: {type(c).__name__} size={c.size}  {c}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class ConicSolution:
    status: str
    objective_value: float = None
    values: dict = field(default_factory=dict)
    duals: dict = field(default_factory=dict)
    residuals: float = float("nan")  # max primal violation at the returned point
    solver: str = ""
    message: str = ""


def _solver_chain(problem):
    has_psd = any(isinstance(c, cp.constraints.PSD) for c in problem.constraints)
    if has_psd:
        return ["CVXOPT", "CLARABEL", "SCS"]
    return ["CLARABEL", "SCS"]


def _max_violation(constraints):
    worst = 0.0
    for c in constraints:
        v = c.violation()
        worst = max(worst, float(np.max(v)) if np.ndim(v) else float(v))
    return worst


def _extract(prog, problem, solver_name, tol):
    values = {}
    for name, var in prog._vars.items():
        val = var.value
        if val is None:
            values[name] = None
        elif var.shape == ():
            values[name] = float(val)
        else:
            values[name] = np.array(val)
    duals = {}
    for name, con in prog._cons:
        dv = con.dual_value
        duals[name] = np.array(dv) if dv is not None else None
    try:
        resid = _max_violation(problem.constraints)
    except Exception:
        resid = float("inf")
    sol = ConicSolution(status=OPTIMAL, objective_value=float(problem.value),
                        values=values, duals=duals, residuals=resid,
                        solver=solver_name)
    if resid > tol:
        sol.status = NUMERICAL_FAILURE
        sol.message = f"returned point violates constraints by {resid:.3e} > tol {tol:.1e}"
    return sol


def solve(prog: ConicProgram, tol=1e-8, feasibility=False) -> ConicSolution:
    """Solve the program, maximizing its affine objective.

    Returns status optimal only when the solver claims optimality and the
    returned point is primal feasible within `tol`. Deterministic for
    identical inputs: the solver chain and each solver's settings are fixed.
    """
    problem = prog.build(feasibility=feasibility)
    chain = _solver_chain(problem)
    failures = []
    demoted = None
    for solver_name in chain:
        try:
            problem.solve(solver=solver_name, verbose=False,
                          **_SOLVER_OPTIONS.get(solver_name, {}))
        except Exception as exc:  # cvxpy SolverError or backend arithmetic faults
            failures.append(f"{solver_name}: {exc}")
            continue
        status = problem.status
        if status == cp.OPTIMAL:
            sol = _extract(prog, problem, solver_name, tol)
            if sol.status == OPTIMAL:
                return sol
            demoted = demoted or sol
            failures.append(f"{solver_name}: {sol.message}")
        elif status == cp.INFEASIBLE:
            return ConicSolution(status=INFEASIBLE, solver=solver_name,
                                 message="solver certified infeasibility")
        else:
            failures.append(f"{solver_name}: status {status}")
    if demoted is not None:
        return demoted
    return ConicSolution(status=NUMERICAL_FAILURE, message="; ".join(failures))


def check_feasibility(prog: ConicProgram, tol=1e-8) -> ConicSolution:
    """Feasibility phase of `solve` (zero objective).

    status == "optimal" means feasible; `values` then holds a witness whose
    maximum constraint violation is reported in `residuals`.
    """
    return solve(prog, tol=tol, feasibility=True)
