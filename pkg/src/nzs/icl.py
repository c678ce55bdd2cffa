"""Iterative coupling linearization (ICL).

The outer loop freezes the coupling gradient at the current iterate,
which turns each step into a proximally regularized zero-sum saddle
subproblem. Each subproblem is solved just accurately enough to pass a
direct variational-inequality check at the scheduled tolerance, which is
what the outer-loop contraction needs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .games import GameSpec, JointPoint, QueryLedger, grad_g
from .solvers import (SaddleSubproblem, SolveReport, StructureError,
                      _JointProblem, extract_approx_ne, solve_apd_bilinear,
                      solve_operator_eg)


class IclError(RuntimeError):
    pass


@dataclass
class IclSchedule:
    """Constant outer-loop schedule.

    eta is the proximal stepsize min(1/delta, 1/min(mu, nu)); theta the
    per-iteration contraction factor of the squared distance; eps_t the
    subproblem inexactness tolerance; T the outer iteration budget; and
    inner_target the distance accuracy that provably implies the
    inexactness condition after one extragradient extraction.
    """

    eta: float
    theta: float
    eps_t: float
    T: int
    inner_target: float
    diameter_sq: float

    def __post_init__(self):
        if not (0 < self.theta < 1):
            raise ValueError("theta must lie in (0, 1)")
        if self.eps_t <= 0 or self.T < 1:
            raise ValueError("schedule requires eps_t > 0 and T >= 1")


def schedule_params(mu, nu, delta, L, eps, D_X, D_Y):
    """Outer schedule for a strongly monotone near-zero-sum game."""
    m = min(mu, nu)
    if m <= 0:
        raise ValueError("min(mu, nu) must be positive; reduce the game "
                         "with solve_monotone instead")
    if not 0 <= delta <= L:
        raise ValueError("delta must lie in [0, L]")
    if eps <= 0:
        raise ValueError("eps must be positive")
    eta = 1.0 / m if delta == 0 else min(1.0 / delta, 1.0 / m)
    theta = m / (1.0 / eta + m)
    eps_t = theta * eps / (4.0 * eta)
    D_sq = D_X ** 2 + D_Y ** 2
    T = max(1, math.ceil((1.0 / theta) * math.log(2.0 * D_sq / eps)))
    inner_target = eps_t ** 2 / (8.0 * L ** 2 * D_sq)
    return IclSchedule(eta, theta, eps_t, T, inner_target, D_sq)


def build_subproblem(game, z_t, eta, ledger=None):
    """Linearize the coupling part at z_t (one coupling-gradient query)."""
    cg = grad_g(game, z_t, ledger)
    phi_form = None
    if game.h_structure is not None:
        hs = game.h_structure
        hs.w_norm()  # prime the cache so shifted copies do not recompute it
        phi_form = hs.shifted(
            d_ax=1.0 / eta, d_ay=1.0 / eta,
            d_bx=cg.x - z_t.x / eta,
            d_by=cg.y - z_t.y / eta)

    def h_grad(x, y):
        hx = 0.5 * (-game.grad_u1_x(x, y) + game.grad_u2_x(x, y))
        hy = 0.5 * (-game.grad_u1_y(x, y) + game.grad_u2_y(x, y))
        return hx, hy

    return SaddleSubproblem(
        c_x=cg.x, c_y=cg.y,
        x_center=z_t.x.copy(), y_center=z_t.y.copy(),
        eta=eta, X=game.X, Y=game.Y,
        L_sub=game.L + 1.0 / eta,
        h_grad=h_grad,
        phi_form=phi_form,
        mu_sub=1.0 / eta + min(game.mu, game.nu),
    )


def check_inexactness(sub, candidate, ledger=None):
    """Exact variational gap of a candidate for the subproblem.

    With z = (x_c, y_c) the candidate, returns the maximum over feasible
    (x, y) of <grad_x phi(z), x_c - x> - <grad_y phi(z), y_c - y>,
    evaluated with one operator query plus one linear-minimization oracle
    per player. A gap at most eps_t certifies the iterate for the outer
    loop.
    """
    gx, gy = sub.operator(candidate.x, candidate.y, ledger, "cert")
    gap_x = float(gx @ candidate.x - gx @ sub.X.lmo(gx))
    gap_y = float(gy @ candidate.y - gy @ sub.Y.lmo(gy))
    return gap_x + gap_y


def _accept_or_none(sub, x, y, gamma_ex, eps_t, ledger):
    """Extract a candidate by one extragradient step and test the gap."""
    gx, gy = sub.operator(x, y, ledger, "cert")
    xe = sub.X.project(x - gamma_ex * gx)
    ye = sub.Y.project(y - gamma_ex * gy)
    cand = JointPoint(xe, ye)
    gap = check_inexactness(sub, cand, ledger)
    if gap <= eps_t:
        return cand, gap
    return None


def solve_icl(game, eps, inner="auto", check_period=4, eps_t_slack=1.0,
              init=None, keep_trace=False, max_outer=None):
    """Outer loop of iterative coupling linearization.

    Runs the scheduled number of outer iterations; every subproblem is
    solved until an extracted candidate passes the inexactness check at
    tolerance eps_t (early exit), with the distance-certified route as a
    backstop. eps_t_slack <= 1 optionally tightens the per-iteration
    tolerance (any tolerance at most the scheduled one keeps the
    guarantee).

    inner: "apd" (structured primal-dual), "eg" (operator extragradient),
    or "auto" (apd when bilinear structure is available).
    """
    if not 0 < eps_t_slack <= 1.0:
        raise ValueError("eps_t_slack must lie in (0, 1]")
    sched = schedule_params(game.mu, game.nu, game.delta, game.L, eps,
                            game.X.diameter(), game.Y.diameter())
    eps_t = sched.eps_t * eps_t_slack
    L_sub = 2.0 * game.L
    gamma_ex = 1.0 / (np.sqrt(2.0) * L_sub)
    ledger = QueryLedger()
    T = sched.T if max_outer is None else min(sched.T, max_outer)

    if init is None:
        z = JointPoint(game.X.canonical_point(), game.Y.canonical_point())
    else:
        z = init
    use_apd = (inner == "apd") or (inner == "auto" and game.h_structure is not None)
    if inner == "apd" and game.h_structure is None:
        raise StructureError("game has no bilinear structure for the apd "
                             "inner solver; use inner='eg'")

    history = []
    trace = [z] if keep_trace else None
    for _ in range(T):
        sub = build_subproblem(game, z, sched.eta, ledger)

        def stop_check(x, y, _sub=sub):
            return _accept_or_none(_sub, x, y, gamma_ex, eps_t, ledger)

        Lop, _ = sub.operator_bounds()
        if use_apd:
            f = sub.phi_form
            per_iter = min(0.5, np.sqrt(f.ax * f.ay) / max(f.w_norm(), 1e-14))
        else:
            per_iter = max(sub.mu_sub / (np.sqrt(2.0) * Lop), 1e-8)
        budget = int(80.0 * max(np.log(max(sched.diameter_sq, 2.0)
                                       / sched.inner_target), 1.0)
                     / per_iter) + 400

        if use_apd:
            rep = solve_apd_bilinear(
                sub, target_sq_dist=sched.inner_target, max_iter=budget,
                certificate_period=64, ledger=ledger,
                stop_check=stop_check, check_period=check_period)
        else:
            rep = solve_operator_eg(
                sub.operator, sub.X, sub.Y, sub.x_center, sub.y_center,
                gamma=gamma_ex, budget=budget, ledger=ledger,
                stop_check=stop_check, check_period=check_period,
                target_sq_dist=sched.inner_target, mu_min=sub.mu_sub,
                Lop=Lop, certificate_period=64)

        if "accepted" in rep.extras:
            cand, gap = rep.extras["accepted"]
        else:
            if rep.status != "converged":
                raise IclError(
                    f"inner solve stalled: gap did not reach {eps_t:.3e} "
                    f"within {rep.iterations} iterations")
            got = _accept_or_none(sub, rep.point.x, rep.point.y, gamma_ex,
                                  eps_t, ledger)
            if got is None:
                raise IclError(
                    "inexactness check failed after a distance-certified "
                    "inner solve; this contradicts the extraction bound "
                    "and indicates a bug")
            cand, gap = got
        z = cand
        history.append((rep.iterations, gap))
        if keep_trace:
            trace.append(z)

    theory_bound = (1.0 - sched.theta) ** T * sched.diameter_sq + eps / 2.0
    certified = theory_bound
    if game.monotone_modulus > 0:
        prob = _JointProblem(game, ledger)
        gamma_c = 1.0 / (2.0 * game.L)
        b2 = prob.certificate(z.concat(), gamma_c, game.monotone_modulus)
        certified = min(certified, b2)

    report = SolveReport(
        point=z, ledger=ledger, iterations=T,
        certified_sq_distance=certified,
        residual_history=history,
        status="converged",
        extras={"schedule": sched, "trace": trace},
    )
    return report


def solve_monotone(game, eps, inner="auto"):
    """Approximate equilibrium for a merely monotone game (mu or nu zero).

    Adds the curvature min(eps/(4 D_X^2), L/2) to the first player and
    min(eps/(4 D_Y^2), L/2) to the second, moved between the players so
    the coupling part is unchanged, solves the reduced strongly monotone
    game to squared-distance accuracy eps^2/(32 L^2 D^2), and converts via
    one extraction step. The returned gap bound is a valid
    unilateral-deviation-gain bound of at most eps.

    Returns (point, gap_bound, report).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    DX2 = game.X.diameter() ** 2
    DY2 = game.Y.diameter() ** 2
    a_x = min(eps / (4.0 * DX2), game.L / 2.0)
    a_y = min(eps / (4.0 * DY2), game.L / 2.0)

    u1x, u1y = game.grad_u1_x, game.grad_u1_y
    u2x, u2y = game.grad_u2_x, game.grad_u2_y
    u1v, u2v = game.u1, game.u2
    hs = game.h_structure
    reduced = GameSpec(
        grad_u1_x=lambda x, y: u1x(x, y) - 2 * a_x * x,
        grad_u1_y=lambda x, y: u1y(x, y) + 2 * a_y * y,
        grad_u2_x=lambda x, y: u2x(x, y) + 2 * a_x * x,
        grad_u2_y=lambda x, y: u2y(x, y) - 2 * a_y * y,
        L=game.L + 2 * max(a_x, a_y),
        mu=game.mu + 2 * a_x,
        nu=game.nu + 2 * a_y,
        delta=game.delta,
        X=game.X, Y=game.Y,
        u1=(None if u1v is None else
            lambda x, y: u1v(x, y) - a_x * float(x @ x) + a_y * float(y @ y)),
        u2=(None if u2v is None else
            lambda x, y: u2v(x, y) + a_x * float(x @ x) - a_y * float(y @ y)),
        h_structure=(None if hs is None else
                     hs.shifted(d_ax=2 * a_x, d_ay=2 * a_y)),
        monotone_modulus=min(game.mu + 2 * a_x, game.nu + 2 * a_y),
    )

    D_sq = DX2 + DY2
    eps_acc = eps ** 2 / (32.0 * game.L ** 2 * D_sq)
    report = solve_icl(reduced, eps_acc, inner=inner)
    gamma = 1.0 / (np.sqrt(2.0) * reduced.L)
    point, bound = extract_approx_ne(reduced, report.point, gamma,
                                     dist=np.sqrt(eps_acc),
                                     ledger=report.ledger)
    report.extras["reduced_mu"] = reduced.mu
    report.extras["reduced_nu"] = reduced.nu
    report.extras["gap_bound"] = bound
    report.point = point
    return point, bound, report
