"""Game specification, utility decomposition, and structural probes.

A two-player game is described by the four partial gradients of the
utilities u1(x, y) and u2(x, y). Decomposed quantities are always
computed from those partials, so the identities

    g = -(u1 + u2)/2      (common-loss coupling part)
    h = (-u1 + u2)/2      (strictly competitive part)
    H = (grad_x h, -grad_y h)
    F = grad g + H = -(grad_x u1, grad_y u2)

hold by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .vecmat import SparseMatrix, spmv, spmv_transpose, spectral_norm


@dataclass
class QueryLedger:
    """Oracle-call counters for one solver run.

    f_queries counts whole-game operator evaluations, h_queries counts
    competitive-part (subproblem) operator evaluations, g_queries counts
    coupling-gradient evaluations, and cert_queries counts evaluations
    spent on stopping certificates and inexactness checks, kept separate
    so reported totals can include or exclude certification cost.
    """

    f_queries: int = 0
    h_queries: int = 0
    g_queries: int = 0
    cert_queries: int = 0

    def main_queries(self):
        """Operator queries of the running algorithm itself."""
        return self.f_queries + self.h_queries

    def as_dict(self):
        return {"f_queries": self.f_queries, "h_queries": self.h_queries,
                "g_queries": self.g_queries, "cert_queries": self.cert_queries}


@dataclass(frozen=True)
class JointPoint:
    """A strategy pair (x, y)."""

    x: np.ndarray
    y: np.ndarray

    def concat(self):
        return np.concatenate([self.x, self.y])

    @classmethod
    def split(cls, z, n_x):
        z = np.asarray(z, dtype=np.float64)
        return cls(z[:n_x].copy(), z[n_x:].copy())

    def norm(self):
        return float(np.sqrt(self.x @ self.x + self.y @ self.y))

    def distance_to(self, other):
        dx = self.x - other.x
        dy = self.y - other.y
        return float(np.sqrt(dx @ dx + dy @ dy))


def _w_matvec(W, x):
    if isinstance(W, SparseMatrix):
        return spmv(W, x)
    return W @ x


def _w_rmatvec(W, y):
    if isinstance(W, SparseMatrix):
        return spmv_transpose(W, y)
    return W.T @ y


def _w_norm(W):
    if isinstance(W, SparseMatrix):
        return spectral_norm(W)
    return float(np.linalg.norm(W, 2))


@dataclass
class BilinearSaddleForm:
    """Structured competitive part

        h(x, y) = <W x, y> + (ax/2)|x|^2 + <bx, x>
                           - (ay/2)|y|^2 - <by, y> + const

    with isotropic quadratics, which is all the inner solver needs for
    proximal maps realized as shifted projections.
    """

    W: object                 # SparseMatrix or dense ndarray
    ax: float = 0.0
    ay: float = 0.0
    bx: np.ndarray = None
    by: np.ndarray = None
    const: float = 0.0
    _w_norm_cache: float = field(default=None, repr=False)

    def __post_init__(self):
        n_y, n_x = (self.W.shape if self.W is not None else (0, 0))
        if self.bx is None:
            self.bx = np.zeros(n_x)
        if self.by is None:
            self.by = np.zeros(n_y)

    def w_norm(self):
        if self._w_norm_cache is None:
            self._w_norm_cache = _w_norm(self.W)
        return self._w_norm_cache

    def value(self, x, y):
        return float(y @ _w_matvec(self.W, x)
                     + 0.5 * self.ax * (x @ x) + self.bx @ x
                     - 0.5 * self.ay * (y @ y) - self.by @ y + self.const)

    def grad_x(self, x, y):
        return _w_rmatvec(self.W, y) + self.ax * x + self.bx

    def grad_y(self, x, y):
        return _w_matvec(self.W, x) - self.ay * y - self.by

    def shifted(self, d_ax=0.0, d_ay=0.0, d_bx=None, d_by=None):
        return BilinearSaddleForm(
            self.W, self.ax + d_ax, self.ay + d_ay,
            self.bx if d_bx is None else self.bx + d_bx,
            self.by if d_by is None else self.by + d_by,
            self.const, self._w_norm_cache)


@dataclass
class GameSpec:
    """Oracle bundle and constants for one game.

    The four gradient oracles take (x, y) arrays and return arrays. L is
    a smoothness bound for both utilities; mu and nu are the strong
    convexity/concavity moduli of the competitive part; delta bounds the
    coupling part's smoothness. monotone_modulus is a certified lower
    bound on the strong monotonicity of the game operator (defaults to
    min(mu, nu), which is valid whenever the coupling part is jointly
    convex).
    """

    grad_u1_x: callable
    grad_u1_y: callable
    grad_u2_x: callable
    grad_u2_y: callable
    L: float
    mu: float
    nu: float
    delta: float
    X: object
    Y: object
    known_ne: JointPoint = None
    u1: callable = None
    u2: callable = None
    h_structure: BilinearSaddleForm = None
    best_response_x: callable = None
    best_response_y: callable = None
    monotone_modulus: float = None
    cross_check: bool = False

    def __post_init__(self):
        if not (0 <= self.mu <= self.L and 0 <= self.nu <= self.L):
            raise ValueError("moduli must satisfy 0 <= mu, nu <= L")
        if not (0 <= self.delta <= self.L):
            raise ValueError("delta must lie in [0, L]")
        if self.monotone_modulus is None:
            self.monotone_modulus = min(self.mu, self.nu)
        if self.known_ne is not None:
            if not (self.X.contains(self.known_ne.x, 1e-8)
                    and self.Y.contains(self.known_ne.y, 1e-8)):
                raise ValueError("known_ne must be feasible")

    # value helpers (require value oracles)

    def g_value(self, x, y):
        return -0.5 * (self.u1(x, y) + self.u2(x, y))

    def h_value(self, x, y):
        return 0.5 * (-self.u1(x, y) + self.u2(x, y))

    def joint_set(self):
        from .sets import ProductSet
        return ProductSet([self.X, self.Y])

    def diameter_sq(self):
        return self.X.diameter() ** 2 + self.Y.diameter() ** 2


def grad_g(game, z, ledger=None):
    """Coupling-part gradient -(grad u1 + grad u2)/2, as a JointPoint."""
    x, y = z.x, z.y
    gx = -0.5 * (game.grad_u1_x(x, y) + game.grad_u2_x(x, y))
    gy = -0.5 * (game.grad_u1_y(x, y) + game.grad_u2_y(x, y))
    if ledger is not None:
        ledger.g_queries += 1
    return JointPoint(gx, gy)


def operator_H(game, z, ledger=None):
    """Competitive-part operator (grad_x h, -grad_y h)."""
    x, y = z.x, z.y
    hx = 0.5 * (-game.grad_u1_x(x, y) + game.grad_u2_x(x, y))
    hy = -0.5 * (-game.grad_u1_y(x, y) + game.grad_u2_y(x, y))
    if ledger is not None:
        ledger.h_queries += 1
    return JointPoint(hx, hy)


def operator_F(game, z, ledger=None):
    """Game operator -(grad_x u1, grad_y u2)."""
    x, y = z.x, z.y
    fx = -game.grad_u1_x(x, y)
    fy = -game.grad_u2_y(x, y)
    if ledger is not None:
        ledger.f_queries += 1
    if game.cross_check:
        g = grad_g(game, z)
        h = operator_H(game, z)
        err = max(np.max(np.abs(fx - g.x - h.x)), np.max(np.abs(fy - g.y - h.y)))
        scale = max(1.0, float(np.max(np.abs(fx)) + np.max(np.abs(fy))))
        if err > 1e-12 * scale:
            raise AssertionError(
                f"operator decomposition mismatch: |F - (grad g + H)| = {err:.3e}")
    return JointPoint(fx, fy)


def random_feasible(S, rng, spread=1.0):
    """A random feasible point: project canonical + scaled Gaussian noise."""
    base = S.canonical_point()
    scale = max(S.diameter(), 1.0) * spread
    return S.project(base + scale * rng.standard_normal(S.dimension))


@dataclass
class StructureReport:
    """Sampled structural estimates for a game.

    monotonicity: min over pairs of <F(z')-F(z), z'-z> / |z'-z|^2.
    coupling_convexity: same secant quantity for grad g (>= 0 when the
    coupling part is jointly convex).
    coupling_smoothness: max over pairs of |grad g(z')-grad g(z)| / |z'-z|
    (an empirical lower bound for delta).
    """

    monotonicity: float
    coupling_convexity: float
    coupling_smoothness: float
    n_pairs: int


def probe_structure(game, n_pairs, seed=0):
    """Estimate monotonicity and coupling structure from random pairs."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    mono = np.inf
    gsec = np.inf
    gsmooth = 0.0
    done = 0
    while done < n_pairs:
        z = JointPoint(random_feasible(game.X, rng), random_feasible(game.Y, rng))
        zp = JointPoint(random_feasible(game.X, rng), random_feasible(game.Y, rng))
        dx = zp.x - z.x
        dy = zp.y - z.y
        nsq = float(dx @ dx + dy @ dy)
        if nsq < 1e-24:
            continue  # degenerate pair, resample
        f1 = operator_F(game, z)
        f2 = operator_F(game, zp)
        mono = min(mono, (float((f2.x - f1.x) @ dx + (f2.y - f1.y) @ dy)) / nsq)
        g1 = grad_g(game, z)
        g2 = grad_g(game, zp)
        gdx = g2.x - g1.x
        gdy = g2.y - g1.y
        gsec = min(gsec, (float(gdx @ dx + gdy @ dy)) / nsq)
        gsmooth = max(gsmooth, float(np.sqrt(gdx @ gdx + gdy @ gdy) / np.sqrt(nsq)))
        done += 1
    return StructureReport(mono, gsec, gsmooth, n_pairs)
