"""Problem-family constructors.

Families: regularized matrix games with transaction fees, convex
reformulations (bilinear and general coupling), seeded sparse benchmark
instances, synthetic quadratic games with a known equilibrium, a tiny
leader-follower example with closed-form solutions, and matching
pennies.
"""

from dataclasses import dataclass, field

import numpy as np

from .vecmat import SparseMatrix, spmv, spmv_transpose, spectral_norm
from .sets import Simplex, Ball, Box
from .games import BilinearSaddleForm, GameSpec, JointPoint


# ---------------------------------------------------------------------------
# matrix games with a concave-convex quadratic regularizer
# ---------------------------------------------------------------------------

@dataclass
class MatrixGame:
    """u1 = <A x, y> + R,  u2 = <B x, y> - R  on simplex strategy sets,

    with R(x, y) = -(reg_mu/2)|x|^2 + (reg_nu/2)|y|^2.
    """

    A: SparseMatrix
    B: SparseMatrix
    reg_mu: float = 0.0
    reg_nu: float = 0.0
    _norms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.A.shape != self.B.shape:
            raise ValueError("payoff matrices must have equal shape")
        if self.reg_mu < 0 or self.reg_nu < 0:
            raise ValueError("regularizer curvatures must be >= 0")

    @property
    def n(self):
        return self.A.n_cols

    @property
    def m(self):
        return self.A.n_rows

    def coupling_matrix(self):
        """(A + B)/2, the common-loss payoff component."""
        return self.A.with_values(0.5 * (self.A.values + self.B.values))

    def competitive_matrix(self):
        """(A - B)/2, the strictly competitive payoff component."""
        return self.A.with_values(0.5 * (self.A.values - self.B.values))

    def coupling_norm(self):
        if "beta" not in self._norms:
            self._norms["beta"] = spectral_norm(self.coupling_matrix()) \
                if np.any(self.A.values + self.B.values) else 0.0
        return self._norms["beta"]

    def smoothness(self):
        if "L" not in self._norms:
            na = spectral_norm(self.A) if self.A.nnz else 0.0
            nb = spectral_norm(self.B) if self.B.nnz else 0.0
            self._norms["L"] = max(na, nb) + max(self.reg_mu, self.reg_nu)
        return self._norms["L"]

    def game_spec(self, L=None, monotone_modulus=None):
        """GameSpec view of the raw (unreformulated) game.

        The competitive part h = -<K x, y> - R is mu-strongly convex and
        nu-strongly concave, but the coupling part -<C x, y> is bilinear,
        not jointly convex, so delta here is only its smoothness bound and
        monotone_modulus defaults to min(mu, nu)/2, which is certified
        whenever |C| <= sqrt(mu nu)/2.
        """
        A, B, mu, nu = self.A, self.B, self.reg_mu, self.reg_nu
        if L is None:
            L = self.smoothness()
        K = self.competitive_matrix()
        beta = self.coupling_norm()
        if monotone_modulus is None:
            monotone_modulus = (min(mu, nu) / 2 if beta > 0 else min(mu, nu))
        Wm = K.scaled(-1.0)

        def u1(x, y):
            return float(y @ spmv(A, x) - 0.5 * mu * (x @ x) + 0.5 * nu * (y @ y))

        def u2(x, y):
            return float(y @ spmv(B, x) + 0.5 * mu * (x @ x) - 0.5 * nu * (y @ y))

        X, Y = Simplex(self.n), Simplex(self.m)
        return GameSpec(
            grad_u1_x=lambda x, y: spmv_transpose(A, y) - mu * x,
            grad_u1_y=lambda x, y: spmv(A, x) + nu * y,
            grad_u2_x=lambda x, y: spmv_transpose(B, y) + mu * x,
            grad_u2_y=lambda x, y: spmv(B, x) - nu * y,
            L=L, mu=mu, nu=nu, delta=min(beta, L),
            X=X, Y=Y, u1=u1, u2=u2,
            h_structure=BilinearSaddleForm(Wm, ax=mu, ay=nu),
            best_response_x=_quad_best_response(lambda y: spmv_transpose(A, y), mu, X),
            best_response_y=_quad_best_response(lambda x: spmv(B, x), nu, Y),
            monotone_modulus=monotone_modulus,
        )


def _quad_best_response(linear_term, curvature, S):
    """Exact maximizer of <c, w> - (curvature/2)|w|^2 over S.

    For positive curvature this is a scaled projection; for zero it is
    the linear-minimization oracle at -c.
    """
    if curvature > 0:
        def br(other):
            return S.project(linear_term(other) / curvature)
    else:
        def br(other):
            return S.lmo(-linear_term(other))
    return br


# ---------------------------------------------------------------------------
# transaction fees
# ---------------------------------------------------------------------------

def split_pos_neg(M):
    """(M_plus, M_minus) with M = M_plus - M_minus and both nonnegative."""
    v = M.values
    return M.with_values(np.where(v > 0, v, 0.0)), \
        M.with_values(np.where(v < 0, -v, 0.0))


def apply_transaction_fee(M, rho):
    """Post-fee payoff matrices (A, B) for a haircut rho on every payment.

    A = (1-rho) M_plus - M_minus and B = -M_plus + (1-rho) M_minus,
    evaluated as v - rho*v per entry so that exact cases (for example
    integer payoffs with rho*|v| integral) stay exact.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    v = M.values
    fee = rho * v
    A = M.with_values(np.where(v > 0, v - fee, v))
    B = M.with_values(np.where(v > 0, -v, -(v - fee)))
    return A, B


def fee_game(M, rho, reg_mu, reg_nu):
    """MatrixGame for payoff matrix M after applying transaction fee rho."""
    A, B = apply_transaction_fee(M, rho)
    return MatrixGame(A, B, reg_mu, reg_nu)


# ---------------------------------------------------------------------------
# convex reformulations
# ---------------------------------------------------------------------------

@dataclass
class ReformulatedGame:
    """Bilinear-coupling game with curvature moved between the players.

    Player 1 maximizes u1 - beta2 |y|^2 and player 2 maximizes
    u2 - beta1 |x|^2. The equilibrium is unchanged, and the new coupling
    part -<C x, y> + (beta1/2)|x|^2 + (beta2/2)|y|^2 is jointly convex
    because sqrt(beta1 beta2) = |C|.
    """

    base: MatrixGame
    beta: float
    beta1: float
    beta2: float

    def game_spec(self, L=None):
        g = self.base
        A, B, mu, nu = g.A, g.B, g.reg_mu, g.reg_nu
        b1, b2 = self.beta1, self.beta2
        K = g.competitive_matrix()
        if L is None:
            L = g.smoothness() + 2 * max(b1, b2)
        delta = self.beta + max(b1, b2)

        def u1(x, y):
            return float(y @ spmv(A, x) - 0.5 * mu * (x @ x)
                         + 0.5 * nu * (y @ y) - b2 * (y @ y))

        def u2(x, y):
            return float(y @ spmv(B, x) + 0.5 * mu * (x @ x)
                         - 0.5 * nu * (y @ y) - b1 * (x @ x))

        X, Y = Simplex(g.n), Simplex(g.m)
        return GameSpec(
            grad_u1_x=lambda x, y: spmv_transpose(A, y) - mu * x,
            grad_u1_y=lambda x, y: spmv(A, x) + nu * y - 2 * b2 * y,
            grad_u2_x=lambda x, y: spmv_transpose(B, y) + mu * x - 2 * b1 * x,
            grad_u2_y=lambda x, y: spmv(B, x) - nu * y,
            L=L, mu=mu / 2, nu=nu / 2, delta=delta,
            X=X, Y=Y, u1=u1, u2=u2,
            h_structure=BilinearSaddleForm(K.scaled(-1.0), ax=mu - b1, ay=nu - b2),
            best_response_x=_quad_best_response(
                lambda y: spmv_transpose(A, y), mu, X),
            best_response_y=_quad_best_response(
                lambda x: spmv(B, x), nu, Y),
            monotone_modulus=min(mu, nu) / 2,
        )


def reformulate_bilinear(game, beta):
    """Choose (beta1, beta2) from (2*beta vs mu, nu) and reformulate.

    Requires beta = |(A+B)/2| <= sqrt(mu nu)/2 so the reformulated
    coupling part is certifiably jointly convex. Case rules:
    both 2*beta <= mu and <= nu: beta1 = beta2 = beta;
    mu <= 2*beta <= nu: beta1 = mu/2, beta2 = 2*beta^2/mu;
    nu <= 2*beta <= mu: symmetric. Always beta1 <= mu/2, beta2 <= nu/2,
    and beta1*beta2 = beta^2.
    """
    mu, nu = game.reg_mu, game.reg_nu
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta > 0.5 * np.sqrt(mu * nu) * (1 + 1e-12):
        raise ValueError(
            f"coupling norm {beta:.3e} exceeds sqrt(mu*nu)/2 = "
            f"{0.5 * np.sqrt(mu * nu):.3e}; the game is not certifiably "
            "monotone under this reformulation")
    if 2 * beta <= mu and 2 * beta <= nu:
        b1 = b2 = beta
    elif mu <= 2 * beta <= nu:
        b1, b2 = mu / 2, 2 * beta ** 2 / mu
    elif nu <= 2 * beta <= mu:
        b1, b2 = 2 * beta ** 2 / nu, nu / 2
    else:  # pragma: no cover - excluded by the beta precondition
        raise ValueError("inconsistent curvature case")
    return ReformulatedGame(game, beta, b1, b2)


def reformulate_general(game, beta):
    """Curvature-shift reformulation for a general beta-smooth coupling part.

    Player 1 maximizes u1 - beta |y|^2 and player 2 maximizes
    u2 - beta |x|^2. The new coupling part g + (beta/2)(|x|^2 + |y|^2) is
    jointly convex and 2*beta-smooth; the competitive moduli drop to
    mu - beta and nu - beta. Requires beta <= min(mu, nu)/2.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta > 0.5 * min(game.mu, game.nu) * (1 + 1e-12):
        raise ValueError("beta must be at most min(mu, nu)/2")
    if beta == 0.0:
        return game
    u1x, u1y = game.grad_u1_x, game.grad_u1_y
    u2x, u2y = game.grad_u2_x, game.grad_u2_y
    u1v, u2v = game.u1, game.u2
    hs = game.h_structure
    new_hs = hs.shifted(d_ax=-beta, d_ay=-beta) if hs is not None else None
    return GameSpec(
        grad_u1_x=u1x,
        grad_u1_y=lambda x, y: u1y(x, y) - 2 * beta * y,
        grad_u2_x=lambda x, y: u2x(x, y) - 2 * beta * x,
        grad_u2_y=u2y,
        L=game.L + 2 * beta,
        mu=game.mu - beta, nu=game.nu - beta, delta=min(2 * beta, game.L + 2 * beta),
        X=game.X, Y=game.Y,
        known_ne=game.known_ne,
        u1=(None if u1v is None else
            lambda x, y: u1v(x, y) - beta * float(y @ y)),
        u2=(None if u2v is None else
            lambda x, y: u2v(x, y) - beta * float(x @ x)),
        h_structure=new_hs,
        monotone_modulus=min(game.mu - beta, game.nu - beta),
    )


# ---------------------------------------------------------------------------
# seeded sparse benchmark instances
# ---------------------------------------------------------------------------

def _sample_without_replacement(rng, total, count):
    """Seeded partial Fisher-Yates over a virtual index space [0, total)."""
    state = {}
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        j = int(rng.integers(i, total))
        out[i] = state.get(j, j)
        state[j] = state.get(i, i)
    return out


def gen_sparse_experiment(n, m, nnz, seed, mu, nu, normalize=True):
    """Random sparse payoff instance: nnz coordinates chosen uniformly
    without replacement, values uniform on [-1, 1], optional rescaling so
    the spectral norm is 1, plus the standard regularizer curvatures.

    Returns (MatrixGame at fee rho=0 i.e. (M, -M), metadata dict). The raw
    matrix M is available in the metadata for fee sweeps.
    """
    if nnz > n * m:
        raise ValueError("nnz exceeds the number of matrix entries")
    rng = np.random.default_rng(seed)
    flat = _sample_without_replacement(rng, n * m, nnz)
    rows = flat // n
    cols = flat % n
    values = rng.uniform(-1.0, 1.0, nnz)
    M = SparseMatrix.from_coo(rows, cols, values, (m, n))
    norm_raw = spectral_norm(M) if nnz else 0.0
    if normalize and norm_raw > 0:
        M = M.scaled(1.0 / norm_raw)
    norm_abs = spectral_norm(M.with_values(np.abs(M.values))) if nnz else 0.0
    meta = {
        "n": n, "m": m, "nnz": int(nnz), "seed": int(seed),
        "mu": float(mu), "nu": float(nu),
        "normalize": bool(normalize),
        "norm_raw": float(norm_raw),
        "norm": 1.0 if (normalize and norm_raw > 0) else float(norm_raw),
        "norm_abs": float(norm_abs),
        "sets": {"x": {"kind": "simplex", "dim": n},
                 "y": {"kind": "simplex", "dim": m}},
    }
    return fee_game(M, 0.0, mu, nu), {"M": M, **meta}


# ---------------------------------------------------------------------------
# synthetic quadratics with a known equilibrium
# ---------------------------------------------------------------------------

def gen_quadratic_known_ne(n_x, n_y, mu, nu, delta, coupling_norm, seed):
    """Quadratic game with an interior equilibrium placed by construction.

    h(x, y) = (mu/2)|x|^2 - (nu/2)|y|^2 + <K x, y> + <kx, x> + <ky, y>
    and g(z) = z' G z / 2 + <c, z> with G positive semidefinite of norm
    delta. The linear terms are chosen so the game operator vanishes at a
    random interior target, which becomes known_ne. Ball feasible sets are
    sized at ten times the equilibrium norm so the target stays interior.
    """
    if min(mu, nu) < 0 or delta < 0 or coupling_norm < 0:
        raise ValueError("moduli must be nonnegative")
    rng = np.random.default_rng(seed)
    n = n_x + n_y

    if delta > 0:
        R = rng.standard_normal((n, n))
        G = R @ R.T
        G *= delta / np.linalg.norm(G, 2)
    else:
        G = np.zeros((n, n))
    c = rng.standard_normal(n) * 0.1 if delta > 0 else np.zeros(n)

    if coupling_norm > 0:
        K = rng.standard_normal((n_y, n_x))
        K *= coupling_norm / np.linalg.norm(K, 2)
    else:
        K = np.zeros((n_y, n_x))

    x_star = rng.standard_normal(n_x) if (delta > 0 or coupling_norm > 0) \
        else np.zeros(n_x)
    y_star = rng.standard_normal(n_y) if (delta > 0 or coupling_norm > 0) \
        else np.zeros(n_y)
    z_star = np.concatenate([x_star, y_star])

    gz = G @ z_star + c
    kx = -(gz[:n_x] + mu * x_star + K.T @ y_star)
    ky = gz[n_x:] + nu * y_star - K @ x_star
    # with these linear terms: F(z*) = grad g(z*) + H(z*) = 0, where
    # H = (mu x + K' y + kx, nu y - K x - ky)

    rx = max(10.0 * np.linalg.norm(x_star), 1.0)
    ry = max(10.0 * np.linalg.norm(y_star), 1.0)
    X = Ball(np.zeros(n_x), rx)
    Y = Ball(np.zeros(n_y), ry)

    Hu1 = np.zeros((n, n))
    Hu1[:n_x, :n_x] = -mu * np.eye(n_x)
    Hu1[:n_x, n_x:] = -K.T
    Hu1[n_x:, :n_x] = -K
    Hu1[n_x:, n_x:] = nu * np.eye(n_y)
    # u1 = -g - h, u2 = -g + h
    L = max(np.linalg.norm(-G - Hu1, 2), np.linalg.norm(-G + Hu1, 2)) * (1 + 1e-9)
    L = max(L, mu, nu, delta)

    def g_val(x, y):
        z = np.concatenate([x, y])
        return float(0.5 * z @ (G @ z) + c @ z)

    def h_val(x, y):
        return float(0.5 * mu * (x @ x) - 0.5 * nu * (y @ y)
                     + y @ (K @ x) + kx @ x + ky @ y)

    def grad_g_x(x, y):
        z = np.concatenate([x, y])
        return (G @ z)[:n_x] + c[:n_x]

    def grad_g_y(x, y):
        z = np.concatenate([x, y])
        return (G @ z)[n_x:] + c[n_x:]

    spec = GameSpec(
        grad_u1_x=lambda x, y: -grad_g_x(x, y) - (mu * x + K.T @ y + kx),
        grad_u1_y=lambda x, y: -grad_g_y(x, y) - (-nu * y + K @ x + ky),
        grad_u2_x=lambda x, y: -grad_g_x(x, y) + (mu * x + K.T @ y + kx),
        grad_u2_y=lambda x, y: -grad_g_y(x, y) + (-nu * y + K @ x + ky),
        L=float(L), mu=mu, nu=nu, delta=delta,
        X=X, Y=Y,
        known_ne=JointPoint(x_star, y_star),
        u1=lambda x, y: -g_val(x, y) - h_val(x, y),
        u2=lambda x, y: -g_val(x, y) + h_val(x, y),
        h_structure=BilinearSaddleForm(K, ax=mu, ay=nu, bx=kx, by=-ky),
        monotone_modulus=min(mu, nu),
    )
    return spec


# ---------------------------------------------------------------------------
# small closed-form examples
# ---------------------------------------------------------------------------

def stackelberg_example():
    """Two-versus-one dimensional game whose Nash point (5/8, 1, -3/4)
    differs from the leader-follower limit (40/63, 68/63, -46/63).

    u1(x, y) = -(x1-1)^2/2 - (x2-1)^2/2 + x1 y / 2
    u2(x, y) = x2 y / 2 - (y+1)^2
    on X = [0,1] x [1,2] and Y = [-1, 0].
    """
    X = Box([0.0, 1.0], [1.0, 2.0])
    Y = Box([-1.0], [0.0])

    def u1(x, y):
        return float(-0.5 * (x[0] - 1) ** 2 - 0.5 * (x[1] - 1) ** 2
                     + 0.5 * x[0] * y[0])

    def u2(x, y):
        return float(0.5 * x[1] * y[0] - (y[0] + 1) ** 2)

    # decomposition: h = (x1-1)^2/4 + (x2-1)^2/4 + (x2-x1) y/4 - (y+1)^2/2
    W = np.array([[-0.25, 0.25]])
    h_form = BilinearSaddleForm(W, ax=0.5, ay=1.0,
                                bx=np.array([-0.5, -0.5]),
                                by=np.array([1.0]),
                                const=0.0)
    Hg = np.array([[0.5, 0.0, -0.25],
                   [0.0, 0.5, -0.25],
                   [-0.25, -0.25, 1.0]])
    delta = float(np.linalg.norm(Hg, 2))
    Hu1 = np.array([[-1.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])
    Hu2 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, 0.5, -2.0]])
    L = float(max(np.linalg.norm(Hu1, 2), np.linalg.norm(Hu2, 2))) * (1 + 1e-9)

    return GameSpec(
        grad_u1_x=lambda x, y: np.array([-(x[0] - 1) + 0.5 * y[0],
                                         -(x[1] - 1)]),
        grad_u1_y=lambda x, y: np.array([0.5 * x[0]]),
        grad_u2_x=lambda x, y: np.array([0.0, 0.5 * y[0]]),
        grad_u2_y=lambda x, y: np.array([0.5 * x[1] - 2 * (y[0] + 1)]),
        L=L, mu=0.5, nu=1.0, delta=delta,
        X=X, Y=Y,
        known_ne=JointPoint(np.array([5 / 8, 1.0]), np.array([-3 / 4])),
        u1=u1, u2=u2,
        h_structure=h_form,
        monotone_modulus=0.5,
    )


def stackelberg_reference_points():
    """(nash, leader_follower_limit) for the closed-form example."""
    nash = JointPoint(np.array([5 / 8, 1.0]), np.array([-3 / 4]))
    stack = JointPoint(np.array([40 / 63, 68 / 63]), np.array([-46 / 63]))
    return nash, stack


def matching_pennies():
    """Zero-sum 2x2 game with the uniform mixed equilibrium, mu = nu = 0."""
    M = SparseMatrix.from_dense(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    game = fee_game(M, 0.0, 0.0, 0.0)
    spec = game.game_spec()
    return GameSpec(
        grad_u1_x=spec.grad_u1_x, grad_u1_y=spec.grad_u1_y,
        grad_u2_x=spec.grad_u2_x, grad_u2_y=spec.grad_u2_y,
        L=spec.L, mu=0.0, nu=0.0, delta=0.0,
        X=spec.X, Y=spec.Y,
        known_ne=JointPoint(np.array([0.5, 0.5]), np.array([0.5, 0.5])),
        u1=spec.u1, u2=spec.u2,
        h_structure=spec.h_structure,
        best_response_x=spec.best_response_x,
        best_response_y=spec.best_response_y,
        monotone_modulus=0.0,
    )
