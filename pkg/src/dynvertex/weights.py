"""Vertex weights: the unfused four-case weight, column weights, fused
weights (recursion, closed hypergeometric form, factored special cases),
the stochastic correction and stochastic weights, the multiplicative-
parameter psi/phi families, and the closed-form degeneration weights.
"""

import cmath
import math
from dataclasses import dataclass

from .errors import (
    InadmissibleParameters,
    PatternMismatch,
    SingularParameter,
)
from .specfun import (
    EllipticContext,
    elliptic_pochhammer,
    f_eval,
    q_pochhammer,
    vwp_elliptic_v,
)

_SINGULAR_TOL = 1e-13


class ArrowConfig(tuple):
    """Arrow configuration (i1, j1; i2, j2): vertical in, horizontal in,
    vertical out, horizontal out."""

    def __new__(cls, i1, j1, i2, j2):
        return super().__new__(cls, (i1, j1, i2, j2))

    @property
    def i1(self):
        return self[0]

    @property
    def j1(self):
        return self[1]

    @property
    def i2(self):
        return self[2]

    @property
    def j2(self):
        return self[3]

    @property
    def conserving(self):
        return self[0] + self[1] == self[2] + self[3]


@dataclass(frozen=True)
class UnfusedWeightParams:
    """Spectral parameter v, additive dynamical parameter lam, spin Lambda,
    and evaluation context."""

    v: complex
    lam: complex
    Lambda: complex
    ctx: EllipticContext

    def shifted(self, dv=0, dlam=0):
        return UnfusedWeightParams(self.v + dv, self.lam + dlam,
                                   self.Lambda, self.ctx)


def _inv(value, what):
    if abs(value) < _SINGULAR_TOL:
        raise SingularParameter("vanishing %s" % what)
    return 1.0 / value


def w1(cfg, p):
    """The four-case unfused vertex weight; 0 off the support."""
    i1, j1, i2, j2 = cfg
    if min(i1, j1, i2, j2) < 0 or j1 > 1 or j2 > 1:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    ctx = p.ctx
    eta = complex(ctx.eta)
    v, lam, L = complex(p.v), complex(p.lam), complex(p.Lambda)
    denom = f_eval(eta * L - v, ctx) * f_eval(lam, ctx)
    dinv = _inv(denom, "f(eta*Lambda - v) * f(lambda)")
    k = i1
    if j1 == 0 and j2 == 0:
        return (f_eval(eta * (L - 2 * k) - v, ctx)
                * f_eval(lam + 2 * k * eta, ctx) * dinv)
    if j1 == 1 and j2 == 0:
        # (k,1; k+1,0)
        return (f_eval(v + lam + eta * (2 * k + 2 - L), ctx)
                * f_eval(2 * eta, ctx) * dinv)
    if j1 == 0 and j2 == 1:
        # (k,0; k-1,1)
        return (f_eval(lam - v + eta * (2 * k - 2 - L), ctx)
                * f_eval(2 * eta * (L + 1 - k), ctx)
                * f_eval(2 * k * eta, ctx)
                * dinv * _inv(f_eval(2 * eta, ctx), "f(2*eta)"))
    # (k,1; k,1)
    return (f_eval(eta * (2 * k - L) - v, ctx)
            * f_eval(lam + 2 * eta * (k - L), ctx) * dinv)


def column_weight(i1, j1_bits, i2, j2_bits, v_base, p):
    """Weight of a single column of J unfused vertices.

    Rows are indexed bottom to top; row k (0-based) carries spectral
    parameter v_base + 2*eta*k.  The dynamical parameter at the topmost row
    is p.lam; going down it shifts by -2*eta where the row above has
    horizontal input 0 and by +2*eta where it has input 1.  Vertical counts
    flow upward from i1 to i2."""
    J = len(j1_bits)
    if len(j2_bits) != J:
        raise ValueError("bit lists must have equal length")
    eta = complex(p.ctx.eta)
    lam_rows = [0.0j] * J
    lam_rows[J - 1] = complex(p.lam)
    for y in range(J - 2, -1, -1):
        shift = 2 * eta if j1_bits[y + 1] else -2 * eta
        lam_rows[y] = lam_rows[y + 1] + shift
    out = 1.0 + 0.0j
    i_cur = i1
    for k in range(J):
        b1, b2 = j1_bits[k], j2_bits[k]
        i_next = i_cur + b1 - b2
        if i_next < 0:
            return 0.0 + 0.0j
        pk = UnfusedWeightParams(complex(v_base) + 2 * eta * k, lam_rows[k],
                                 p.Lambda, p.ctx)
        out *= w1(ArrowConfig(i_cur, b1, i_next, b2), pk)
        if out == 0:
            return 0.0 + 0.0j
        i_cur = i_next
    if i_cur != i2:
        return 0.0 + 0.0j
    return out


def _w_hat(J, i1, j1, i2, j2, p, loff, memo):
    """Column-summed fused weight by the four-term top-row recursion.

    loff counts the accumulated dynamical shift in units of 2*eta relative
    to p.lam; the spectral base p.v is fixed and the top row of a level-J
    block sits at p.v + 2*eta*(J-1)."""
    if j1 < 0 or j2 < 0 or j1 > J or j2 > J or i1 < 0 or i2 < 0:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    if J == 0:
        return 1.0 + 0.0j if (i1 == i2 and j1 == 0 and j2 == 0) else 0.0 + 0.0j
    key = (J, i1, j1, i2, j2, loff)
    hit = memo.get(key)
    if hit is not None:
        return hit
    eta = complex(p.ctx.eta)
    top = UnfusedWeightParams(complex(p.v) + 2 * eta * (J - 1),
                              complex(p.lam) + 2 * eta * loff,
                              p.Lambda, p.ctx)
    val = 0.0 + 0.0j
    val += (_w_hat(J - 1, i1, j1, i2, j2, p, loff - 1, memo)
            * w1(ArrowConfig(i2, 0, i2, 0), top))
    val += (_w_hat(J - 1, i1, j1 - 1, i2 - 1, j2, p, loff + 1, memo)
            * w1(ArrowConfig(i2 - 1, 1, i2, 0), top))
    val += (_w_hat(J - 1, i1, j1, i2 + 1, j2 - 1, p, loff - 1, memo)
            * w1(ArrowConfig(i2 + 1, 0, i2, 1), top))
    val += (_w_hat(J - 1, i1, j1 - 1, i2, j2 - 1, p, loff + 1, memo)
            * w1(ArrowConfig(i2, 1, i2, 1), top))
    memo[key] = val
    return val


def w_fused_recursive(J, cfg, p, memo=None):
    """Fused weight W_J via the recursion, = (column sum) / binom(J, j2)."""
    i1, j1, i2, j2 = cfg
    if j1 < 0 or j1 > J or j2 < 0 or j2 > J or i1 < 0 or i2 < 0:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    if memo is None:
        memo = {}
    return _w_hat(J, i1, j1, i2, j2, p, 0, memo) / math.comb(J, j2)


def _closed_eval(J, cfg, p, eps):
    """One evaluation of the closed-form fused weight with the integer
    parameters J and (i1, i2) continued to J + eps and (i1, i2) + phi*eps
    in Pochhammer *arguments* only (product lengths stay integral)."""
    i1, j1, i2, j2 = cfg
    ctx = p.ctx
    eta = complex(ctx.eta)
    v, lam, L = complex(p.v), complex(p.lam), complex(p.Lambda)
    Je = J + eps if j1 + j2 > J else J
    di = 1.6180339887498949 * eps if i2 < j1 else 0.0
    I1, I2 = i1 + di, i2 + di

    def ep(a, k):
        return elliptic_pochhammer(a, k, ctx)

    a1 = lam + 2 * eta * (2 * j1 + j2 - Je)
    rest = [
        2 * eta * j1,
        2 * eta * j2,
        lam + 2 * eta * j1,
        lam + 2 * eta * (I1 + 2 * j1 - Je - 1 - L),
        eta * L + v + 2 * eta * (j2 - I1 - 1),
        eta * L - v - 2 * eta * (I1 - j2 + Je),
        lam + 2 * eta * (I2 + j1 + j2 - Je),
    ]
    series = vwp_elliptic_v(a1, rest, 1.0, ctx, terminate_at=min(j1, j2))
    f2e = f_eval(2 * eta, ctx)
    pref = (f2e ** (i2 - i1)
            * ep(2 * eta * L, i1) * _inv(ep(2 * eta * L, i2), "[2eL]_i2")
            * ep(2 * eta * I1, j2) * ep(2 * eta * (Je - j2), j1)
            * ep(eta * L - v - 2 * eta * (I1 + j1), J - j1 - j2)
            * ep(2 * eta * (L - I1 + j2), j1)
            * _inv(ep(2 * eta * j1, j1) * ep(eta * L - v, J), "prefactor den")
            * ep(lam + 2 * eta * I2, J - j1 - j2)
            * ep(lam + 2 * eta * (I1 + 2 * j1 - Je) - eta * L - v, j2)
            * ep(lam + v + 2 * eta * (I1 + 2 * j1 - 1) - eta * L, j1)
            * _inv(ep(lam + 2 * eta * (2 * j1 + j2 - Je), j2)
                   * ep(lam + 2 * eta * j1, J - j1 - j2)
                   * ep(lam + 2 * eta * (2 * j1 + j2 - Je - 1), j1),
                   "prefactor den"))
    return pref * series


def w_fused_closed(J, cfg, p):
    """Fused weight W_J in closed form: an elliptic-Pochhammer prefactor
    times a terminating very-well-poised 12v11 evaluated at z = 1.

    Arrow configurations with j1 + j2 > J or i2 < j1 make the formula a
    structural 0 * inf product (a prefactor zero against a series pole at
    exactly integer Pochhammer arguments).  Those are evaluated by
    continuing the integer parameters by +-eps in the Pochhammer arguments
    and Richardson-extrapolating the even-order error away (four levels,
    O(eps^8)), which agrees with the recursive evaluation to ~1e-11."""
    i1, j1, i2, j2 = cfg
    if j1 < 0 or j1 > J or j2 < 0 or j2 > J or i1 < 0 or i2 < 0:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    if j1 + j2 <= J and i2 >= j1:
        return _closed_eval(J, cfg, p, 0.0)
    eps = 6e-3

    def mean(e):
        return (_closed_eval(J, cfg, p, e)
                + _closed_eval(J, cfg, p, -e)) / 2

    vals = [mean(eps / 2 ** i) for i in range(4)]
    fac = 4.0
    while len(vals) > 1:
        vals = [(fac * b - a) / (fac - 1) for a, b in zip(vals, vals[1:])]
        fac *= 4
    return vals[0]


def w_fused_special(J, cfg, p, case):
    """Fully factored special-case fused weights.

    case "jJ":      (i, J; i+J-j, j)
    case "j20":     (i, j; i+j, 0)
    case "j2J":     (i, j; i+j-J, J)
    case "vLambda": any conserving cfg, requires p.v == -eta * p.Lambda
    """
    i1, j1, i2, j2 = cfg
    ctx = p.ctx
    eta = complex(ctx.eta)
    v, lam, L = complex(p.v), complex(p.lam), complex(p.Lambda)
    f2e = f_eval(2 * eta, ctx)

    def ep(a, k):
        return elliptic_pochhammer(a, k, ctx)

    if not ArrowConfig(*cfg).conserving:
        return 0.0 + 0.0j

    if case == "jJ":
        if j1 != J:
            raise PatternMismatch("case jJ requires j1 == J")
        i, j = i1, j2
        return (f2e ** (J - j)
                * ep(2 * eta * i - eta * L - v, j)
                * _inv(ep(eta * L - v, J), "[eL-v]_J")
                * ep(v + lam - eta * L + 2 * eta * (i + 2 * J - j - 1), J - j)
                * ep(lam + 2 * eta * (i + J - L - 1), j)
                * _inv(ep(lam + 2 * eta * (J - 1), J), "[lam+2e(J-1)]_J"))
    if case == "j20":
        if j2 != 0:
            raise PatternMismatch("case j20 requires j2 == 0")
        i, j = i1, j1
        return (f2e ** j
                * ep(2 * eta * J, J)
                * _inv(ep(2 * eta * (J - j), J - j) * ep(2 * eta * j, j),
                       "binomial den")
                * ep(lam + 2 * eta * (i + j), J - j)
                * _inv(ep(eta * L - v, J), "[eL-v]_J")
                * ep(v + lam + 2 * eta * (i + 2 * j - 1) - eta * L, j)
                * ep(eta * L - 2 * eta * (i + j) - v, J - j)
                * _inv(ep(lam + 2 * eta * j, J - j)
                       * ep(lam + 2 * eta * (2 * j - J - 1), j), "den"))
    if case == "j2J":
        if j2 != J:
            raise PatternMismatch("case j2J requires j2 == J")
        i, j = i1, j1
        if i + j - J < 0:
            return 0.0 + 0.0j
        return (f2e ** (j - J)
                * ep(2 * eta * J, J)
                * _inv(ep(2 * eta * (J - j), J - j) * ep(2 * eta * j, j),
                       "binomial den")
                * ep(2 * eta * i, J - j)
                * ep(2 * eta * (i + j - J) - eta * L - v, j)
                * ep(2 * eta * (L - i - j + J), J - j)
                * _inv(ep(eta * L - v, J), "[eL-v]_J")
                * ep(lam + 2 * eta * (i + j - J) - eta * L - v, J - j)
                * ep(lam + 2 * eta * (i + 2 * j - J - L - 1), j)
                * _inv(ep(lam + 2 * eta * j, J - j)
                       * ep(lam + 2 * eta * (2 * j - J - 1), j), "den"))
    if case == "vLambda":
        if abs(v + eta * L) > 1e-12 * max(1.0, abs(eta * L)):
            raise PatternMismatch("case vLambda requires v == -eta*Lambda")
        if i1 < j2:
            return 0.0 + 0.0j
        return (f2e ** (i2 - i1)
                * ep(2 * eta * J, J)
                * _inv(ep(2 * eta * j1, j1)
                       * ep(2 * eta * (J - j1), J - j1), "binomial den")
                * ep(2 * eta * L, i1)
                * _inv(ep(2 * eta * L, i2), "[2eL]_i2")
                * ep(2 * eta * i1, j2) * ep(2 * eta * (L - i1), J - j2)
                * _inv(ep(2 * eta * L, J), "[2eL]_J")
                * ep(lam + 2 * eta * i2, J - j1)
                * ep(lam + 2 * eta * (i2 + j1 - L - 1), j1)
                * _inv(ep(lam + 2 * eta * j1, J - j1)
                       * ep(lam + 2 * eta * (2 * j1 - J - 1), j1), "den"))
    raise ValueError("unknown case %r" % (case,))


def c_correction(J, cfg, lam, Lambda, ctx):
    """Stochastic correction factor C_J(i1,j1;i2,j2|lambda)."""
    i1, j1, i2, j2 = cfg
    eta = complex(ctx.eta)
    lam = complex(lam)
    L = complex(Lambda)
    f2e = f_eval(2 * eta, ctx)

    def ep(a, k):
        return elliptic_pochhammer(a, k, ctx)

    return (f2e ** (j2 - j1)
            * ep(2 * eta * L, i2) * _inv(ep(2 * eta * L, i1), "[2eL]_i1")
            * ep(lam + 2 * eta * (i1 + 2 * j1 - J), j2)
            * ep(lam + 2 * eta * (i1 + 2 * j1 - j2 - 1 - L), J - j2)
            * _inv(ep(lam + 2 * eta * (i1 + j1 - j2), J - j1)
                   * ep(lam + 2 * eta * (i1 + 2 * j1 - j2 - 1 - L), j1),
                   "den")
            * ep(lam + 2 * eta * j1, J - j1)
            * ep(lam + 2 * eta * (2 * j1 - J - 1), j1)
            * _inv(ep(lam + 2 * eta * (2 * i1 + 2 * j1 - j2 - L), j2)
                   * ep(lam + 2 * eta * (2 * i1 + 2 * j1 - 2 * j2 - 1 - L),
                        J - j2), "den"))


def sigma(J, cfg, p, w_value=None):
    """Stochastic vertex weight sigma_J = C_J * W_J * (elliptic binomial
    ratio).  w_value optionally supplies a precomputed W_J."""
    i1, j1, i2, j2 = cfg
    if j1 < 0 or j1 > J or j2 < 0 or j2 > J or i1 < 0 or i2 < 0:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    ctx = p.ctx
    eta = complex(ctx.eta)
    if w_value is None:
        # The recursion is exact to rounding; the closed form (equal to it,
        # and cross-checked in the tests) needs Richardson regularization on
        # part of the domain and is kept as an independent oracle.
        w_value = w_fused_recursive(J, cfg, p)
    cval = c_correction(J, cfg, p.lam, p.Lambda, ctx)

    def ep(k):
        return elliptic_pochhammer(2 * eta * k, k, ctx)

    ratio = (ep(j1) * elliptic_pochhammer(2 * eta * (J - j1), J - j1, ctx)
             * _inv(ep(j2)
                    * elliptic_pochhammer(2 * eta * (J - j2), J - j2, ctx),
                    "binomial ratio den"))
    return cval * w_value * ratio


@dataclass(frozen=True)
class PsiParams:
    """Multiplicative parameters for the psi weights.  u is the combined
    spectral parameter (the product of the row and column factors)."""

    u: complex
    s: complex
    q: complex
    J: int
    kappa: complex


def _psi_unfused_params(p, j1):
    """Map PsiParams to the additive trigonometric parameters; the dynamical
    parameter depends on the horizontal input j1."""
    q = complex(p.q)
    if abs(q) < _SINGULAR_TOL:
        raise SingularParameter("q must be nonzero")
    # kappa enters only through its logarithm; values down to ~1e-60 stay
    # well inside floating range for the sine factors (|f| ~ |kappa|^(-1/2)).
    if abs(complex(p.kappa)) < 1e-60:
        raise SingularParameter("psi evaluation requires kappa != 0")
    two_pi_i = 2j * math.pi
    eta = 1j * cmath.log(q) / (4 * math.pi)
    ctx = EllipticContext(mode="trigonometric", eta=eta)
    Lambda = cmath.log(complex(p.s)) / (two_pi_i * eta)
    v = -cmath.log(complex(p.u)) / two_pi_i
    lam = ((2 * j1 - p.J) * cmath.log(q)
           - cmath.log(complex(p.kappa))) / two_pi_i
    return UnfusedWeightParams(v, lam, Lambda, ctx)


def psi(cfg, p):
    """psi weight, computed through the stochastic sigma weight in the
    trigonometric mode under the multiplicative-to-additive substitution."""
    i1, j1, i2, j2 = cfg
    J = p.J
    if j1 < 0 or j1 > J or j2 < 0 or j2 > J or i1 < 0 or i2 < 0:
        return 0.0 + 0.0j
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    up = _psi_unfused_params(p, j1)
    return sigma(J, cfg, up)


@dataclass(frozen=True)
class PhiParams:
    q: complex
    a: complex
    b: complex
    kappa: complex


def phi(j, i, p):
    """The q-Hahn-type stochastic weight phi_{q,a,b,kappa}(j|i); 0 unless
    0 <= j <= i."""
    if j < 0 or j > i:
        return 0.0 + 0.0j
    q, a, b, kap = (complex(p.q), complex(p.a), complex(p.b),
                    complex(p.kappa))
    if abs(a) < _SINGULAR_TOL:
        raise SingularParameter("phi requires a != 0")
    qp = q_pochhammer
    num = (a ** j
           * qp(q, q, i)
           * qp(b / a, q, j) * qp(a, q, i - j)
           * qp(q ** i * b * kap, q, i - j)
           * qp(q ** (i - j + 1) * kap, q, j))
    den = (qp(q, q, j) * qp(q, q, i - j) * qp(b, q, i)
           * qp(q ** (i - j) * a * kap, q, i - j)
           * qp(q ** (2 * i - 2 * j + 1) * a * kap, q, j))
    return num * _inv(den, "phi denominator")


def psi_u_equals_s(cfg, p):
    """Closed form of psi at u = s (independent cross-check of the sigma
    route): equals phi with a = s**2 q**J, b = s**2, at the same kappa."""
    i1, j1, i2, j2 = cfg
    if i1 + j1 != i2 + j2:
        return 0.0 + 0.0j
    s2 = complex(p.s) ** 2
    q = complex(p.q)
    pp = PhiParams(q=q, a=s2 * q ** p.J, b=s2, kappa=complex(p.kappa))
    return phi(j2, i1, pp)


def sigma_j1_full_row(J, i, j, u, s, q, xi, kappa):
    """Explicit q-form of sigma_J(i, J; i+J-j, j): an independent oracle for
    the j1 = J column of the stochastic weights.  Written in the
    Rogers-summable shape, so the row sum over j is exactly 1."""
    qp = q_pochhammer
    ux = u * xi
    kt = 1.0 / kappa
    s2 = s * s
    num = ((q / (ux * s)) ** j
           * qp(q ** (-J), q, j) * qp(ux / (s * q ** i), q, j)
           * qp(kt * q ** (-i), q, j)
           * qp(kt * q ** (-2 * i) / (s2 * q ** J), q, j)
           * (1 - kt / (s2 * q ** (2 * i + J - 2 * j)))
           * qp(q ** (1 - i - J) / s2, q, J)
           * qp(kt * q ** (1 - i - J) / (ux * s), q, J))
    den = (qp(q, q, j) * qp(q ** (1 - i - J) / s2, q, j)
           * qp(kt / (s * ux * q ** (i + J - 1)), q, j)
           * qp(kt / (s2 * q ** (2 * i - 1)), q, j)
           * (1 - kt / (s2 * q ** (2 * i + J)))
           * qp(q ** (1 - 2 * i - J) * kt / s2, q, J)
           * qp(q ** (1 - J) / (ux * s), q, J))
    return num * _inv(den, "sigma_j1_full_row denominator")


def degeneration_weight(kind, **kw):
    """Closed-form probabilities/rates for the named degenerations.

    aip:       kw A, B, j, i          -> coalescing jump probability
    asym_pep:  kw q, kappa, j, i      -> two-state exclusion probability
    hahn_pep:  kw A, J, kappa_hat, j, i
    jgamma_pep: kw J, Upsilon, eta, x -> P[X = x], x in {eta-1, eta}
    madm_rate: kw q, kappa_hat, j, i  -> continuous-time jump rate
    """
    if kind == "aip":
        A, B, j, i = kw["A"], kw["B"], kw["j"], kw["i"]
        if A <= 0 or B <= 0:
            raise InadmissibleParameters("aip requires A, B > 0")
        if i == 0:
            return 1.0 if j == 0 else 0.0
        if j == 0:
            return A / (A + B)
        if j == i:
            return B / (A + B)
        return 0.0
    if kind == "asym_pep":
        q, kap, j, i = kw["q"], kw["kappa"], kw["j"], kw["i"]
        if not (0 < q < 1) or kap > 0:
            raise InadmissibleParameters(
                "asym_pep requires q in (0,1) and kappa <= 0")
        if (j, i) == (0, 0) or (j, i) == (1, 2):
            return 1.0
        if (j, i) == (0, 1):
            return (q - kap) / ((q + 1) * (1 - kap))
        if (j, i) == (1, 1):
            return (1 - q * kap) / ((q + 1) * (1 - kap))
        return 0.0
    if kind == "hahn_pep":
        A, J, kh, j, i = (kw["A"], kw["J"], kw["kappa_hat"], kw["j"],
                          kw["i"])
        if kh <= 2 * A + 2 * J:
            raise InadmissibleParameters(
                "hahn_pep requires kappa_hat > 2A + 2J")
        if j < 0 or j > min(i, J) or i - j > A:
            return 0.0
        from .specfun import rational_pochhammer as rp
        val = (math.comb(J, j) * math.comb(A, i - j) / math.comb(A + J, i)
               * rp(i - A - J - kh, i - j) * rp(i - j - kh + 1, j)
               / (rp(i - j - A - kh, i - j)
                  * rp(2 * i - 2 * j + 1 - A - kh, j)))
        return val.real
    if kind == "jgamma_pep":
        J, ups, eta_k, x = kw["J"], kw["Upsilon"], kw["eta"], kw["x"]
        if ups < J + 1:
            raise InadmissibleParameters("jgamma_pep requires Upsilon >= J+1")
        if not 0 <= eta_k <= J + 1:
            raise InadmissibleParameters("eta must lie in [0, J+1]")
        if x == eta_k - 1:
            return (eta_k / (J + 1)) * (1 + (J + 1 - eta_k) / ups)
        if x == eta_k:
            return ((J + 1 - eta_k) / (J + 1)) * (1 - eta_k / ups)
        return 0.0
    if kind == "madm_rate":
        q, kh, j, i = kw["q"], kw["kappa_hat"], kw["j"], kw["i"]
        if not (0 < q < 1) or kh > 0:
            raise InadmissibleParameters(
                "madm_rate requires q in (0,1) and kappa_hat <= 0")
        if j < 1 or j > i:
            return 0.0
        return (q ** j * (1 - q ** (2 * i - 2 * j + 1) * kh)
                / ((1 - q ** j) * (1 - q ** (2 * i - j + 1) * kh)))
    raise ValueError("unknown degeneration kind %r" % (kind,))
