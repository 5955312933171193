"""Exact moment identities for the particle systems, verified three ways:
Monte Carlo expectation, exact small-system enumeration, and nested-circle
contour quadrature.

Two forms are supported.  The multiplicative form applies to the q-Hahn
model: the expectation of a k-fold product involving q^(+-h_N(x)) equals a
k-fold contour integral over circles enclosing the cluster
union_i {1, 1/q, ..., q^(1-J_i)} and excluding 0 and every b_i, with

the nesting convention that, for i < j, the j-th circle strictly contains
1/q times the i-th (so later circles grow to the right while every left
edge hugs the cluster).  The additive (PEP) form applies to the partial
exclusion process: circles enclose {2, ..., J+1}, exclude 0, and for
i < j the j-th circle strictly contains the i-th shifted by -1.  Both
identities require the probe sites listed in weakly decreasing order.

The printed sources drift by one in a few indices; the conventions frozen
here (which factors read the current at x_j versus x_j + 1, which prefix
products stop at x_j - 1, and the direction of the contour nesting) were
pinned by an automated offset sweep against exact enumeration and are
exercised by the tests.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContourInfeasible, NotConverged, SizeLimit
from .models import ModelSpec, _cyc, current, exact_law, run_ensemble

# Frozen index conventions (calibrated against exact enumeration; see the
# tests).  The multiplicative-form expectation factor j (0-based) reads the
# current at site x_{j+1} and multiplies prod_{i=1}^{x_{j+1}-1} b_i; the
# PEP-form factors read the current at x_j + 1 and use the site exponent
# x_j as below.
_QHAHN_B_AT_SAME_X = True  # b-product index = current index (x_{j+1})
_PEP_H_SHIFT = 1           # current read at x_j + PEP_H_SHIFT
_PEP_X_COEFF_SHIFT = 0     # first factor uses (J+1)*(x_j + shift)
_RHS_PEP_EXPONENT_SHIFT = 0  # ((y-J-1)/y)^(x_j + shift)
_RHS_PEP_SIGN_PER_VAR = -1   # integral carries (-1)^k from orientation


# ---------------------------------------------------------------------------
# Specification


@dataclass(frozen=True)
class ObservableSpec:
    """A k-point moment observable for one model at one time horizon."""

    model: ModelSpec
    x_list: tuple
    N: int

    def __post_init__(self):
        object.__setattr__(self, "x_list",
                           tuple(int(x) for x in self.x_list))
        if any(x < 1 for x in self.x_list) or not self.x_list:
            raise ValueError("x_list must hold positive site indices")
        if any(a < b for a, b in zip(self.x_list, self.x_list[1:])):
            raise ValueError(
                "x_list must be weakly decreasing; the identity is stated "
                "for ordered probe sites")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.model.variant not in ("qhahn", "jgamma_pep"):
            raise ValueError(
                "moment identities cover the qhahn and jgamma_pep variants")

    @property
    def k(self):
        return len(self.x_list)

    @property
    def form(self):
        return "qhahn" if self.model.variant == "qhahn" else "pep"


@dataclass(frozen=True)
class ContourSpec:
    """Nested circles on the real axis, one per integration variable,
    ordered outermost first."""

    circles: tuple  # ((center, radius), ...) as floats
    nodes_per_circle: int = 512
    # Per-level nesting maps applied to earlier circles when checking the
    # later ones: a multiplicative factor (1/q) for the multiplicative form,
    # an additive shift (-1) for the PEP form.  Populated by solve_contours;
    # informational for hand-built contours.
    nesting_offsets: tuple = ()

    def __post_init__(self):
        n = self.nodes_per_circle
        if n < 4 or n & (n - 1):
            raise ValueError("nodes_per_circle must be a power of two >= 4")
        object.__setattr__(
            self, "circles",
            tuple((float(c), float(r)) for c, r in self.circles))
        object.__setattr__(self, "nesting_offsets",
                           tuple(self.nesting_offsets))


# ---------------------------------------------------------------------------
# Left sides


def _qhahn_lhs_factors(spec):
    """Per-sample functional of the current vector for the multiplicative
    form.  Returns (sites, fn) with fn(h_values) -> float."""
    m = spec.model
    q, delta = m.q, m.delta
    k = spec.k
    cprod = 1.0
    for i in range(1, spec.N + 1):
        cprod *= _cyc(m.C, i)
    bprods = []
    for x in spec.x_list:
        b = 1.0
        for i in range(1, x):
            b *= _cyc(m.B, i)
        bprods.append(b)

    if delta == 0.0:
        # delta -> 0 limit of the normalized product.
        def fn(h):
            out = (-1.0) ** k
            for j in range(k):
                out *= q ** j - q ** h[j]
            return out
        return fn

    dinv = 1.0 / delta
    norm = 1.0
    for j in range(k):
        norm *= 1.0 - dinv * q ** j

    def fn(h):
        out = 1.0 / norm
        for j in range(k):
            out *= ((dinv * q ** j - q ** (-h[j]) * cprod * bprods[j])
                    * (q ** j - q ** h[j]))
        return out

    return fn


def _pep_lhs_factors(spec):
    m = spec.model
    J, gamma = int(m.J), m.gamma
    k, N = spec.k, spec.N
    norm = 1.0
    for j in range(k):
        norm *= gamma + j

    def fn(h):
        out = 1.0 / norm
        for j in range(k):
            x = spec.x_list[j]
            out *= ((N * J - (J + 1) * (x + _PEP_X_COEFF_SHIFT) - h[j]
                     - gamma - j) * (h[j] - j))
        return out

    return fn


def _current_sites(spec):
    if spec.form == "qhahn":
        return list(spec.x_list)
    return [x + _PEP_H_SHIFT for x in spec.x_list]


def lhs_mc(spec, samples, seed):
    """Monte Carlo estimate of the left side (an MCEstimate)."""
    sites = _current_sites(spec)
    fn = (_qhahn_lhs_factors(spec) if spec.form == "qhahn"
          else _pep_lhs_factors(spec))

    def obs(state):
        return fn([current(state, x) for x in sites])

    return run_ensemble(spec.model, spec.N, samples, seed, [obs])[0]


def lhs_exact(spec, bound=200000):
    """The same functional summed exactly over the support of the
    small-system law."""
    sites = _current_sites(spec)
    fn = (_qhahn_lhs_factors(spec) if spec.form == "qhahn"
          else _pep_lhs_factors(spec))
    law = exact_law(spec.model, spec.N, bound=bound)

    def value(cfg):
        h = [sum(cfg[x - 1:]) if x - 1 < len(cfg) else 0 for x in sites]
        return fn(h)

    return law.mean(value)


# ---------------------------------------------------------------------------
# Contour geometry


def _pole_cluster(spec):
    """Real points every contour must enclose."""
    m = spec.model
    if spec.form == "qhahn":
        pts = set()
        for y in range(1, spec.N + 1):
            jy = m.J[(y - 1) % len(m.J)]
            for p in range(jy):
                pts.add(m.q ** (-p))
        return sorted(pts)
    return list(range(2, int(m.J) + 2))


def _exclusions(spec):
    """Real points no contour may enclose or touch."""
    m = spec.model
    if spec.form == "qhahn":
        excl = {0.0}
        for x in range(1, max(spec.x_list) + 1):
            excl.add(float(_cyc(m.B, x)))
        return sorted(excl)
    return [0.0]


def solve_contours(spec, nodes_per_circle=512, margin=0.25):
    """Greedy nested-circle geometry.  The first circle hugs the pole
    cluster; for i < j the j-th circle additionally contains the image
    (1/q times, or -1 plus) of the i-th circle, with a strict margin.
    Raises ContourInfeasible when the exclusions cannot be kept outside."""
    cluster = _pole_cluster(spec)
    excl = _exclusions(spec)
    lo0, hi0 = min(cluster), max(cluster)
    q = spec.model.q if spec.form == "qhahn" else None
    intervals = []
    lo, hi = lo0 - margin, hi0 + margin
    for depth in range(spec.k):
        if depth > 0:
            plo, phi = intervals[-1]
            if spec.form == "qhahn":
                ilo, ihi = plo / q, phi / q
            else:
                ilo, ihi = plo - 1.0, phi - 1.0
            lo = min(lo0 - margin, ilo - 0.5 * margin)
            hi = max(hi0 + margin, ihi + 0.5 * margin)
        intervals.append((lo, hi))
    circles = []
    for lo, hi in intervals:
        c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for e in excl:
            if abs(e - c) <= r + 0.02 * margin:
                raise ContourInfeasible(
                    "excluded point %.6f inside circle (%.4f, %.4f)"
                    % (e, c, r))
        circles.append((c, r))
    if spec.form == "qhahn":
        offsets = (1.0 / q,) * (spec.k - 1)
    else:
        offsets = (-1.0,) * (spec.k - 1)
    return ContourSpec(circles=tuple(circles),
                       nodes_per_circle=nodes_per_circle,
                       nesting_offsets=offsets)


def _relation(img_c, img_r, c, r):
    """Placement of an image circle against a disk on the real axis."""
    d = abs(img_c - c)
    if d > r + img_r:
        return "disjoint"
    if d + img_r < r:
        return "inside"
    if d + r < img_r:
        return "enclosing"
    return "crossing"


def _check_contour(spec, contour):
    cluster = _pole_cluster(spec)
    excl = _exclusions(spec)
    if len(contour.circles) != spec.k:
        raise ContourInfeasible("need one circle per variable")
    for c, r in contour.circles:
        for p in cluster:
            if abs(p - c) >= r:
                raise ContourInfeasible(
                    "cluster point %.6f outside circle (%.4f, %.4f)"
                    % (p, c, r))
        for e in excl:
            if abs(e - c) <= r:
                raise ContourInfeasible(
                    "excluded point %.6f inside circle (%.4f, %.4f)"
                    % (e, c, r))
    for i in range(spec.k):
        for j in range(i + 1, spec.k):
            ci, ri = contour.circles[i]
            cj, rj = contour.circles[j]
            if spec.form == "qhahn":
                q = spec.model.q
                early = _relation(q * cj, q * rj, ci, ri)
                late = _relation(ci / q, ri / q, cj, rj)
            else:
                early = _relation(cj + 1.0, rj, ci, ri)
                late = _relation(ci - 1.0, ri, cj, rj)
            # The cross pole hit by the earlier variable must stay outside
            # its disk; the one hit by the later variable may be enclosed
            # or avoided but must not touch the contour.
            if early not in ("disjoint", "enclosing"):
                raise ContourInfeasible(
                    "cross pole of variable %d not excluded by circle %d"
                    % (i, i))
            if late not in ("disjoint", "inside"):
                raise ContourInfeasible(
                    "cross pole of variable %d touches circle %d"
                    % (j, j))


# ---------------------------------------------------------------------------
# Right sides


def _qhahn_single_factor(spec, z):
    """prod_x (1-z)/(1-z/b_i) * prod_y (1-c_i z)/(1-z) for one variable,
    at the site exponent of one listed x."""
    m = spec.model
    out = np.ones_like(z)
    for i in range(1, spec.N + 1):
        out = out * (1.0 - _cyc(m.C, i) * z) / (1.0 - z)
    return out


def _rhs_single(spec, j, z):
    """The j-th single-variable factor of the integrand (j is 0-based,
    matching x_list order)."""
    m = spec.model
    if spec.form == "qhahn":
        x = spec.x_list[j]
        out = np.ones_like(z)
        for i in range(1, x):
            bi = _cyc(m.B, i)
            out = out * (1.0 - z) / (1.0 - z / bi)
        return out * _qhahn_single_factor(spec, z)
    J = int(m.J)
    x = spec.x_list[j]
    return (((z - J - 1.0) / z) ** (x + _RHS_PEP_EXPONENT_SHIFT)
            * ((z - 1.0) / (z - J - 1.0)) ** spec.N)


def _cross_factor(spec, zi, zj):
    if spec.form == "qhahn":
        return (zi - zj) / (zi - spec.model.q * zj)
    return (zi - zj) / (zi - zj - 1.0)


def _quad_once(spec, contour, n):
    """Tensor-product trapezoid rule with n nodes per circle."""
    k = spec.k
    theta = 2.0 * math.pi * np.arange(n) / n
    nodes, dmeas = [], []
    for c, r in contour.circles:
        z = c + r * np.exp(1j * theta)
        nodes.append(z)
        # (1/2 pi i) dz -> (r e^{i theta} / n) per node; the measure of the
        # multiplicative form also divides by z.
        w = r * np.exp(1j * theta) / n
        if spec.form == "qhahn":
            w = w / z
        dmeas.append(w)
    if k == 1:
        vals = _rhs_single(spec, 0, nodes[0]) * dmeas[0]
        total = vals.sum()
    elif k == 2:
        z1 = nodes[0][:, None]
        z2 = nodes[1][None, :]
        grid = (_rhs_single(spec, 0, z1) * _rhs_single(spec, 1, z2)
                * _cross_factor(spec, z1, z2)
                * dmeas[0][:, None] * dmeas[1][None, :])
        total = grid.sum()
    elif k == 3:
        total = 0.0 + 0.0j
        z2 = nodes[1][:, None]
        z3 = nodes[2][None, :]
        inner = (_rhs_single(spec, 1, z2) * _rhs_single(spec, 2, z3)
                 * _cross_factor(spec, z2, z3)
                 * dmeas[1][:, None] * dmeas[2][None, :])
        f1 = _rhs_single(spec, 0, nodes[0]) * dmeas[0]
        for a in range(n):
            z1 = nodes[0][a]
            total += f1[a] * (inner * _cross_factor(spec, z1, z2)
                              * _cross_factor(spec, z1, z3)).sum()
    else:
        raise ValueError("quadrature supports k <= 3")
    if spec.form == "qhahn":
        total *= spec.model.q ** (k * (k - 1) // 2)
    else:
        total *= float(_RHS_PEP_SIGN_PER_VAR) ** k
    return total


def rhs_quadrature(spec, contour=None, tol=1e-8, full=False):
    """The k-fold contour integral, with node doubling until the change is
    below tol (NotConverged beyond 4096 nodes).  Returns a float when the
    imaginary part is negligible; with full=True, a dict carrying the value
    and convergence diagnostics."""
    if spec.k > 3:
        raise ValueError("quadrature supports k <= 3")
    if contour is None:
        contour = solve_contours(spec)
    _check_contour(spec, contour)
    n = contour.nodes_per_circle
    prev = _quad_once(spec, contour, n)
    while True:
        n *= 2
        if n > 4096:
            raise NotConverged(
                "node doubling did not stabilize below %g" % tol)
        cur = _quad_once(spec, contour, n)
        if abs(cur - prev) < tol:
            break
        prev = cur
    if abs(cur.imag) > 1e-9 * max(1.0, abs(cur)):
        raise NotConverged("integral has non-negligible imaginary part")
    if full:
        return {"value": float(cur.real), "nodes_used": n,
                "doubling_change": float(abs(cur - prev)),
                "imag_part": float(cur.imag)}
    return float(cur.real)


# ---------------------------------------------------------------------------
# Combined check


def identity_check(spec, samples=0, seed=0, exact_bound=200000,
                   contour=None, tol=1e-8):
    """Evaluate the available sides of the identity and report residuals.

    Always computes the quadrature; computes the exact expectation when
    the system is small enough, and a Monte Carlo estimate when samples
    are requested.  Residuals between MC and the others are normalized by
    the standard error."""
    report = {
        "form": spec.form,
        "k": spec.k,
        "x_list": list(spec.x_list),
        "N": spec.N,
        "conventions": {
            "qhahn_b_product_at_current_site": _QHAHN_B_AT_SAME_X,
            "pep_current_site_shift": _PEP_H_SHIFT,
            "pep_x_coefficient_shift": _PEP_X_COEFF_SHIFT,
            "pep_rhs_exponent_shift": _RHS_PEP_EXPONENT_SHIFT,
            "pep_rhs_sign_per_variable": _RHS_PEP_SIGN_PER_VAR,
        },
    }
    if contour is None:
        contour = solve_contours(spec)
    report["contour"] = {"circles": [list(c) for c in contour.circles],
                         "nodes_per_circle": contour.nodes_per_circle,
                         "nesting_offsets": list(contour.nesting_offsets)}
    diag = rhs_quadrature(spec, contour, tol=tol, full=True)
    rhs = diag["value"]
    report["rhs_quadrature"] = rhs
    report["quadrature_diagnostics"] = {
        "nodes_used": diag["nodes_used"],
        "doubling_change": diag["doubling_change"],
        "imag_part": diag["imag_part"]}
    try:
        ex = lhs_exact(spec, bound=exact_bound)
        report["lhs_exact"] = ex
        report["residual_exact_vs_quadrature"] = abs(ex - rhs)
    except SizeLimit:
        report["lhs_exact"] = None
    if samples:
        est = lhs_mc(spec, samples, seed)
        report["lhs_mc"] = {"mean": est.mean, "stderr": est.stderr,
                            "n_samples": est.n_samples,
                            "base_seed": est.base_seed}
        def sigmas(diff):
            if est.stderr > 0.0:
                return diff / est.stderr
            return 0.0 if diff < 1e-12 else math.inf

        report["residual_mc_vs_quadrature_sigmas"] = sigmas(
            abs(est.mean - rhs))
        if report.get("lhs_exact") is not None:
            report["residual_mc_vs_exact_sigmas"] = sigmas(
                abs(est.mean - report["lhs_exact"]))
    return report
