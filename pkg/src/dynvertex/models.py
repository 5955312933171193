"""Seeded Monte Carlo samplers for the dynamical particle systems, plus an
exact small-system distribution oracle.

Particle systems live on sites 1, 2, 3, ... with step boundary data: at time
step y one packet of J_y arrows enters at the left of row y.  Occupancy is
stored densely over [1, t+1] (support cannot outrun the step data).  The
dynamical parameter kappa at a vertex is always evaluated from the closed
form in terms of the height function, kappa = delta * q^(-2*h) * prod(b) *
prod(c); an incremental-update audit utility is provided for the exponent
bookkeeping invariant.

The corner-growth variants evolve a piecewise-linear height function with
slopes in {-2, 0, 2} directly; sloped segments midpoint deterministically
and flat segments flip a (possibly height-dependent) coin.

Large ensembles for the three named degenerations use vectorized engines
that advance all trajectories in lockstep and confine updates to a moving
active window: the packed prefix and empty suffix of the system evolve
deterministically and are tracked in closed form.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InadmissibleParameters,
    InadmissibleWeights,
    SizeLimit,
)
from .weights import PhiParams, PsiParams, phi, psi

_WEIGHT_SUM_TOL = 1e-10
_WEIGHT_NEG_TOL = 1e-12
_VARIANTS = ("general", "qhahn", "jgamma_pep", "asym_pep", "corner",
             "corner_dyn")


# ---------------------------------------------------------------------------
# Model specification


@dataclass(frozen=True)
class ModelSpec:
    """Which particle system to run, with its parameters.

    Sequences (per-site or per-row parameter lists) extend cyclically.
    Admissibility of the sampled weight vectors is validated lazily at
    sampling time.
    """

    variant: str
    q: float = None
    delta: float = None
    U: tuple = None
    Xi: tuple = None
    S: tuple = None
    B: tuple = None
    C: tuple = None
    J: object = None
    gamma: float = None
    p: float = None
    site_capacity_hint: int = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError("unknown variant %r" % (self.variant,))
        for name in ("U", "Xi", "S", "B", "C"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))

    # -- constructors -------------------------------------------------------

    @classmethod
    def general(cls, q, delta, U, Xi, S, J):
        """Row-update model with the full psi transition weights."""
        J = tuple(int(j) for j in J)
        if any(j < 1 for j in J):
            raise ValueError("row degrees must be positive integers")
        return cls(variant="general", q=float(q), delta=delta,
                   U=tuple(U), Xi=tuple(Xi), S=tuple(S), J=J)

    @classmethod
    def qhahn(cls, q, delta, B, C, J):
        """Row-update model with the q-Hahn-type phi transition weights;
        requires c_y = q^{J_y} with positive integer J_y."""
        q = float(q)
        J = tuple(int(j) for j in J)
        C = tuple(float(c) for c in C)
        if any(j < 1 for j in J):
            raise ValueError("row degrees must be positive integers")
        if len(C) != len(J):
            raise ValueError("C and J must have matching lengths")
        for c, j in zip(C, J):
            if abs(c - q ** j) > 1e-12 * max(1.0, abs(c)):
                raise InadmissibleParameters(
                    "qhahn requires c_y = q**J_y (got c=%r, J=%r)" % (c, j))
        return cls(variant="qhahn", q=q, delta=float(delta),
                   B=tuple(float(b) for b in B), C=C, J=J)

    @classmethod
    def jgamma_pep(cls, J, gamma):
        """Discrete-time partial exclusion with capacity J+1 and dynamical
        rate parameter gamma > J+1."""
        J = int(J)
        gamma = float(gamma)
        if J < 1:
            raise ValueError("J must be a positive integer")
        if not gamma > J + 1:
            raise InadmissibleParameters("jgamma_pep requires gamma > J+1")
        return cls(variant="jgamma_pep", J=J, gamma=gamma)

    @classmethod
    def asym_pep(cls, q, delta):
        """Asymmetric capacity-2 exclusion (the a=1/q, b=1/q^2 table)."""
        q = float(q)
        delta = float(delta)
        if not 0 < q < 1:
            raise InadmissibleParameters("asym_pep requires 0 < q < 1")
        if delta > 0:
            raise InadmissibleParameters("asym_pep requires delta <= 0")
        return cls(variant="asym_pep", q=q, delta=delta, J=1)

    @classmethod
    def corner(cls, p):
        """Midpoint corner growth with constant up-probability p."""
        p = float(p)
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        return cls(variant="corner", p=p)

    @classmethod
    def corner_dyn(cls, gamma):
        """Midpoint corner growth with height-dependent up-probability
        (1/2) * (1 - 1/(gamma + height))."""
        gamma = float(gamma)
        if not gamma > 1:
            raise InadmissibleParameters("corner_dyn requires gamma > 1")
        return cls(variant="corner_dyn", gamma=gamma)

    # -- derived quantities -------------------------------------------------

    @property
    def is_corner(self):
        return self.variant in ("corner", "corner_dyn")

    def row_degree(self, y):
        """Arrows entering at the left of row y (1-based)."""
        if self.variant in ("jgamma_pep", "asym_pep"):
            return int(self.J)
        return _cyc(self.J, y)

    def site_cap(self):
        """Hard per-site occupancy cap, or None if unbounded."""
        if self.variant == "jgamma_pep":
            return int(self.J) + 1
        if self.variant == "asym_pep":
            return 2
        return self.site_capacity_hint


def _cyc(seq, i):
    """1-based cyclic lookup."""
    return seq[(i - 1) % len(seq)]


# ---------------------------------------------------------------------------
# States


@dataclass
class SystemState:
    """One particle-system trajectory at a fixed time."""

    time: int
    occupancy: np.ndarray
    total_particles: int
    prefix_particle_counts: np.ndarray
    rng: np.random.Generator
    clamped: int = 0

    def _hcur(self, x):
        """Height function: number of particles at sites >= x."""
        if x <= 1:
            return self.total_particles
        if x - 1 >= len(self.occupancy):
            return 0
        return self.total_particles - int(
            self.prefix_particle_counts[x - 2])


@dataclass
class CornerState:
    """One corner-growth trajectory: heights at lattice positions
    left, left+1, ..., left+len(heights)-1 (the lattice shifts by 1/2 each
    step); the height equals 2|x| outside the stored window."""

    time: int
    left: float
    heights: np.ndarray
    rng: np.random.Generator
    clamped: int = 0

    def height(self, x):
        i = x - self.left
        j = int(round(i))
        if abs(i - j) > 1e-9:
            raise ValueError("x=%r is not on the time-%d lattice"
                             % (x, self.time))
        if 0 <= j < len(self.heights):
            return int(self.heights[j])
        return int(round(2 * abs(x)))

    def positions(self):
        return [self.left + i for i in range(len(self.heights))]


def initial_state(spec, seed=0, rng=None):
    """Fresh trajectory at time 0 (empty system / wedge height)."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    if spec.is_corner:
        left = -2.0
        heights = np.array([2 * abs(left + i) for i in range(5)],
                           dtype=np.int64)
        return CornerState(time=0, left=left, heights=heights, rng=rng)
    occ = np.zeros(1, dtype=np.int64)
    return SystemState(time=0, occupancy=occ, total_particles=0,
                       prefix_particle_counts=np.zeros(1, dtype=np.int64),
                       rng=rng)


def current(state, x):
    """Height function h_t(x) = number of particles at sites >= x."""
    x = int(x)
    if x < 1:
        raise ValueError("site index must be >= 1")
    return state._hcur(x)


# ---------------------------------------------------------------------------
# Transition weight vectors (shared by the sampler and the exact oracle)


def _validate_weights(w, where):
    """Clamp tiny negativity, check normalization; returns (weights,
    clamp count)."""
    w = np.asarray(w, dtype=float)
    clamped = 0
    neg = w < 0
    if neg.any():
        worst = w[neg].min()
        if worst < -_WEIGHT_NEG_TOL:
            raise InadmissibleWeights(
                "negative weight %.3e at %s" % (worst, where))
        clamped = int(neg.sum())
        w = np.where(neg, 0.0, w)
    s = w.sum()
    if abs(s - 1.0) > _WEIGHT_SUM_TOL:
        raise InadmissibleWeights(
            "weight sum %.15f != 1 at %s" % (s, where))
    return w / s, clamped


def _kappa_qhahn(spec, x, y, h):
    """Closed-form dynamical parameter at vertex (x, y-1) given the height
    h = h_{y-1}(x)."""
    val = float(spec.delta) * float(spec.q) ** (-2 * h)
    for k in range(1, x):
        val *= _cyc(spec.B, k)
    for k in range(1, y):
        val *= _cyc(spec.C, k)
    return val


def _kappa_general(spec, x, y, h):
    val = complex(spec.delta) * complex(spec.q) ** (-2 * h)
    for k in range(1, x):
        val *= complex(_cyc(spec.S, k)) ** 2
    for k in range(1, y):
        val *= complex(spec.q) ** _cyc(spec.J, k)
    return val


def _weights_general(spec, x, y, i1, j1, h):
    """Distribution of j2 at site x of row y for the psi model."""
    Jy = _cyc(spec.J, y)
    kappa = _kappa_general(spec, x, y, h)
    if abs(kappa) < 1e-40:
        # Reachable only after ~70 consecutive slide-past-empty moves in
        # one row (branch probability far below any tolerance here); any
        # valid distribution will do, so terminate the sweep.
        vals = np.zeros(min(Jy, i1 + j1) + 1)
        vals[0] = 1.0
        return vals, 0
    p = PsiParams(u=complex(_cyc(spec.U, y)) * complex(_cyc(spec.Xi, x)),
                  s=complex(_cyc(spec.S, x)), q=complex(spec.q), J=Jy,
                  kappa=kappa)
    hi = min(Jy, i1 + j1)
    vals = np.zeros(hi + 1)
    for j2 in range(hi + 1):
        w = psi((i1, j1, i1 + j1 - j2, j2), p)
        if abs(w.imag) > 1e-9:
            raise InadmissibleWeights(
                "non-real psi weight at site %d, row %d" % (x, y))
        vals[j2] = w.real
    return _validate_weights(vals, "site %d, row %d (general)" % (x, y))


def _weights_qhahn(spec, x, y, i1, h):
    """Distribution of j2 at site x of row y for the q-Hahn model; depends
    only on the pre-step occupancy i1 (and the height through kappa)."""
    kappa = _kappa_qhahn(spec, x, y, h)
    bx = _cyc(spec.B, x)
    cy = _cyc(spec.C, y)
    p = PhiParams(q=spec.q, a=bx * cy, b=bx, kappa=kappa)
    vals = np.zeros(i1 + 1)
    for j2 in range(i1 + 1):
        w = phi(j2, i1, p)
        if abs(complex(w).imag) > 1e-9:
            raise InadmissibleWeights(
                "non-real phi weight at site %d, row %d" % (x, y))
        vals[j2] = complex(w).real
    return _validate_weights(vals, "site %d, row %d (qhahn)" % (x, y))


def _asym_up_prob(q, delta, e):
    """P[j2 = 1 | i1 = 1] for the asymmetric capacity-2 model, with
    kappa = delta * q**e evaluated overflow-safely for any integer e."""
    if delta == 0.0:
        return 1.0 / (q + 1.0)
    if e >= 0:
        kap = delta * q ** e
        return (1.0 - q * kap) / ((q + 1.0) * (1.0 - kap))
    kinv = (q ** (-e)) / delta  # |q^{-e}| < ... safe: e < 0 => q^{-e} < 1
    return (kinv - q) / ((q + 1.0) * (kinv - 1.0))


def _weights_asym(spec, x, t, i1, h):
    """Distribution of j2 over {0, 1} for asym_pep at time t (row t+1)."""
    if i1 == 0:
        return np.array([1.0, 0.0]), 0
    if i1 == 2:
        return np.array([0.0, 1.0]), 0
    if i1 != 1:
        raise InadmissibleWeights(
            "asym_pep occupancy %d > 2 at site %d" % (i1, x))
    e = t - 2 * (x - 1) - 2 * h
    pr = _asym_up_prob(spec.q, spec.delta, e)
    return _validate_weights([1.0 - pr, pr],
                             "site %d, row %d (asym_pep)" % (x, t + 1))


def _jgamma_upsilon(spec, x, t, h):
    """Dynamical rate at site x and time t from the closed form in the
    height function."""
    return spec.gamma + 2 * h + (spec.J + 1) * (x - 1) - spec.J * t


def _weights_jgamma(spec, x, t, eta, h):
    """Distribution of X (arrows passed to the right) at site x: two-point
    on {eta-1, eta} for occupied sites, point mass at 0 for empty ones.
    Returned as (values, probabilities)."""
    if eta == 0:
        return (0,), np.array([1.0]), 0
    J = spec.J
    ups = _jgamma_upsilon(spec, x, t, h)
    if ups < spec.gamma - 1e-9:
        raise InadmissibleWeights(
            "Upsilon %.6f < gamma at site %d, time %d" % (ups, x, t))
    p_low = (eta / (J + 1)) * (1 + (J + 1 - eta) / ups)
    p_high = ((J + 1 - eta) / (J + 1)) * (1 - eta / ups)
    w, clamped = _validate_weights(
        [p_low, p_high], "site %d, time %d (jgamma_pep)" % (x, t))
    return (eta - 1, eta), w, clamped


# ---------------------------------------------------------------------------
# Transition enumeration (drives both the sampler and the exact oracle)

_SWEEP_CAP = 256  # safety bound on horizontal propagation past the support


def _row_transitions(occ, t, spec, chooser):
    """Advance one row.  occ is the pre-step occupancy tuple (site x at
    index x-1); chooser(values, weights, where) -> (index, prob) picks one
    branch (sampling) or is called inside an enumeration wrapper (exact
    oracle).  Returns the new occupancy list and the accumulated clamp
    count."""
    y = t + 1
    total = sum(occ)
    incoming = spec.row_degree(y)
    new = []
    clamped = 0
    h = total  # height at the current site, pre-step
    x = 0
    while True:
        x += 1
        if x > len(occ) and incoming == 0:
            break
        if x > len(occ) + _SWEEP_CAP:
            raise SizeLimit("horizontal propagation exceeded the cap")
        i1 = occ[x - 1] if x <= len(occ) else 0
        if spec.variant == "general":
            w, c = _weights_general(spec, x, y, i1, incoming, h)
            j2 = chooser(np.arange(len(w)), w, (x, y))
        elif spec.variant == "qhahn":
            w, c = _weights_qhahn(spec, x, y, i1, h)
            j2 = chooser(np.arange(len(w)), w, (x, y))
        elif spec.variant == "asym_pep":
            w, c = _weights_asym(spec, x, t, i1, h)
            j2 = chooser(np.array([0, 1]), w, (x, y))
        else:
            raise ValueError("not a row-update variant")
        clamped += c
        new.append(i1 + incoming - j2)
        incoming = int(j2)
        h -= i1
    while new and new[-1] == 0:
        new.pop()
    return new, clamped


def _jgamma_transition(occ, t, spec, chooser):
    """One parallel update of the partial exclusion process: all X drawn
    from the time-t state, then eta'(k) = X(k-1) - X(k) + eta(k)."""
    total = sum(occ)
    h = total
    xs = [spec.J]  # X_0 from the step data
    clamped = 0
    for x in range(1, len(occ) + 2):
        eta = occ[x - 1] if x <= len(occ) else 0
        vals, w, c = _weights_jgamma(spec, x, t, eta, h)
        clamped += c
        xs.append(int(chooser(np.array(vals), w, (x, t))))
        h -= eta
    new = []
    for x in range(1, len(occ) + 2):
        eta = occ[x - 1] if x <= len(occ) else 0
        nxt = xs[x - 1] - xs[x] + eta
        if nxt < 0 or nxt > spec.J + 1:
            raise InadmissibleWeights(
                "occupancy %d out of [0, J+1] at site %d" % (nxt, x))
        new.append(nxt)
    while new and new[-1] == 0:
        new.pop()
    return new, clamped


def _corner_up_prob(spec, height):
    if spec.variant == "corner":
        return spec.p
    return 0.5 * (1.0 - 1.0 / (spec.gamma + height))


def _corner_transition(heights, left, t, spec, chooser):
    """One midpoint update of the height function.  The stored window is
    first extended by one lattice unit on each side with wedge values;
    sloped segments midpoint deterministically, flat segments go up or
    down by one with the (possibly height-dependent) coin."""
    n = len(heights)
    ext = [int(round(2 * abs(left - 1)))] + list(heights) + [
        int(round(2 * abs(left + n)))]
    new = []
    for i in range(len(ext) - 1):
        h1, h2 = ext[i], ext[i + 1]
        if h1 != h2:
            if abs(h1 - h2) != 2:
                raise InadmissibleWeights(
                    "segment slope %d not in {-2, 0, 2} at time %d"
                    % (h2 - h1, t))
            new.append((h1 + h2) // 2)
        else:
            pos = left - 1 + i + 0.5
            pr = _corner_up_prob(spec, h1)
            if not -_WEIGHT_NEG_TOL <= pr <= 1 + _WEIGHT_NEG_TOL:
                raise InadmissibleWeights(
                    "up-probability %.6f at x=%.1f, time %d" % (pr, pos, t))
            move = chooser(np.array([-1, 1]),
                           np.array([1.0 - pr, pr]), (pos, t))
            new.append(h1 + int(move))
    return new, left - 0.5


# ---------------------------------------------------------------------------
# Sampling


def _sample_index(w, rng):
    """Inverse-CDF draw from a validated weight vector."""
    cdf = np.cumsum(w)
    return int(np.searchsorted(cdf, rng.random(), side="right").clip(
        0, len(w) - 1))


def step(state, spec):
    """Advance one trajectory by one time step."""
    rng = state.rng

    def chooser(values, w, where):
        return values[_sample_index(w, rng)]

    if spec.is_corner:
        new, nleft = _corner_transition(state.heights, state.left,
                                        state.time, spec, chooser)
        return CornerState(time=state.time + 1, left=nleft,
                           heights=np.array(new, dtype=np.int64), rng=rng,
                           clamped=state.clamped)
    occ = [int(v) for v in state.occupancy]
    if spec.variant == "jgamma_pep":
        new, clamped = _jgamma_transition(occ, state.time, spec, chooser)
    else:
        new, clamped = _row_transitions(occ, state.time, spec, chooser)
    arr = np.array(new if new else [0], dtype=np.int64)
    return SystemState(time=state.time + 1, occupancy=arr,
                       total_particles=int(arr.sum()),
                       prefix_particle_counts=np.cumsum(arr),
                       rng=rng, clamped=state.clamped + clamped)


# ---------------------------------------------------------------------------
# Exact small-system law


@dataclass(frozen=True)
class ExactLaw:
    """Exact distribution over occupancy (or height) configurations."""

    support: tuple
    total_mass: float

    @classmethod
    def from_dict(cls, dist):
        items = sorted(dist.items())
        total = 0.0
        for cfg, pr in items:
            if pr < -_WEIGHT_NEG_TOL:
                raise InadmissibleWeights(
                    "negative probability %.3e for %r" % (pr, cfg))
            total += pr
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise InadmissibleWeights(
                "exact law has total mass %.15f" % total)
        return cls(support=tuple(items), total_mass=total)

    def prob(self, cfg):
        return dict(self.support).get(tuple(cfg), 0.0)

    def mean(self, fn):
        return sum(pr * fn(cfg) for cfg, pr in self.support)

    def tv_distance(self, other):
        keys = {c for c, _ in self.support} | {c for c, _ in other.support}
        a, b = dict(self.support), dict(other.support)
        return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def _enumerate_transitions(cfg, t, spec, prune=0.0):
    """All (new configuration, probability) branches of one step.  With
    prune > 0, branches of probability below the threshold are dropped
    (the psi model lets horizontal arrows slide past empty sites with a
    geometrically small probability, so its support has an infinite tail
    of negligible mass)."""
    branches = []
    stack = []

    def run(path):
        """Replay one prefix of choices, recording the branch points."""
        it = iter(path)

        def chooser(values, w, where):
            try:
                idx = next(it)
            except StopIteration:
                stack.append((list(path), values, w))
                raise _Stop()
            return values[idx]

        if spec.is_corner:
            heights, left = cfg
            return _corner_transition(list(heights), left, t, spec, chooser)
        if spec.variant == "jgamma_pep":
            return _jgamma_transition(list(cfg), t, spec, chooser)
        return _row_transitions(list(cfg), t, spec, chooser)

    # Depth-first expansion over the choice tree, replaying prefixes.  The
    # trees here are tiny (exact laws are guarded by a size bound), so the
    # quadratic replay cost is irrelevant and the sampler code path is
    # reused verbatim.
    pending = [([], 1.0)]
    while pending:
        path, prob = pending.pop()
        try:
            out = run(path)
        except _Stop:
            _, values, w = stack.pop()
            for idx in range(len(values)):
                if w[idx] > 0.0 and prob * w[idx] > prune:
                    pending.append((path + [idx], prob * w[idx]))
            continue
        if spec.is_corner:
            new, nleft = out
            branches.append(((tuple(new), nleft), prob))
        else:
            branches.append((tuple(out[0]), prob))
    return branches


class _Stop(Exception):
    pass


def exact_law(spec, N, bound=200000):
    """Exact forward distribution after N steps, by exhaustive transition
    expansion.  Configurations are occupancy tuples (particle systems) or
    (heights tuple, left position) pairs (corner variants)."""
    if spec.is_corner:
        init = initial_state(spec)
        start = ((tuple(int(v) for v in init.heights), init.left), 1.0)
    else:
        start = ((), 1.0)
    dist = {start[0]: start[1]}
    prune = 1e-14 if spec.variant == "general" else 0.0
    for t in range(N):
        nxt = {}
        work = 0
        for cfg, pr in dist.items():
            for ncfg, npr in _enumerate_transitions(cfg, t, spec, prune):
                nxt[ncfg] = nxt.get(ncfg, 0.0) + pr * npr
                work += 1
                if len(nxt) > bound or work > 64 * bound:
                    raise SizeLimit(
                        "exact law exceeds the configuration bound")
        if prune:
            nxt = {c: p for c, p in nxt.items() if p > prune}
        dist = nxt
    return ExactLaw.from_dict(dist)


# ---------------------------------------------------------------------------
# Corner view of the J=1 partial exclusion process


def corner_view(state, spec=None):
    """Height-function samples of a J=1 partial-exclusion state: returns
    {position: height} with height(x - t/2 - 1) = 2*h_t(x) + 2*(x-1) - t,
    on the grid x = 1, ..., t+2."""
    if spec is not None and spec.variant == "jgamma_pep" and spec.J != 1:
        raise ValueError("corner_view requires J = 1")
    t = state.time
    out = {}
    for x in range(1, t + 3):
        pos = x - t / 2.0 - 1.0
        out[pos] = 2 * current(state, x) + 2 * (x - 1) - t
    return out


def corner_view_exact(spec, N, bound=200000):
    """Exact law of the corner_view height vector after N steps of a J=1
    partial-exclusion model, as {height tuple on the grid: probability}."""
    law = exact_law(spec, N, bound=bound)
    out = {}
    for cfg, pr in law.support:
        occ = list(cfg)

        def h(x):
            return sum(occ[x - 1:]) if x - 1 < len(occ) else 0

        key = tuple(2 * h(x) + 2 * (x - 1) - N for x in range(1, N + 3))
        out[key] = out.get(key, 0.0) + pr
    return out


def corner_heights_exact(spec, N, positions, bound=200000):
    """Exact law of the direct corner model restricted to the given
    positions, as {height tuple: probability}."""
    law = exact_law(spec, N, bound=bound)
    out = {}
    for (heights, left), pr in law.support:
        st = CornerState(time=N, left=left,
                         heights=np.array(heights, dtype=np.int64),
                         rng=None)
        key = tuple(st.height(p) for p in positions)
        out[key] = out.get(key, 0.0) + pr
    return out


# ---------------------------------------------------------------------------
# Ensembles


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate of one observable."""

    mean: float
    stderr: float
    n_samples: int
    base_seed: int


def _trajectory_rng(base_seed, index):
    """Per-trajectory generator: numpy's published SeedSequence mixing of
    (base_seed, index)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(base_seed),
                               spawn_key=(int(index),)))


class _WindowView:
    """Read-only final-state view of one trajectory from a vectorized
    window engine: sites < lo hold `packed` particles, sites beyond the
    window are empty."""

    __slots__ = ("time", "lo", "packed", "total", "_suffix")

    def __init__(self, time, lo, packed, total, suffix):
        self.time = time
        self.lo = lo
        self.packed = packed
        self.total = total
        self._suffix = suffix  # suffix[i] = particles at window sites >= i

    def _hcur(self, x):
        if x <= self.lo:
            return self.total - self.packed * (x - 1)
        i = x - self.lo
        if i >= len(self._suffix):
            return 0
        return int(self._suffix[i])


def _advance_window(arr, lo, packed, grow=64):
    """Maintain the moving-window invariant: grow on the right if the last
    column is touched, advance lo past columns packed in every sample."""
    if arr.shape[1] == 0 or arr[:, -1].any():
        arr = np.concatenate(
            [arr, np.zeros((arr.shape[0], grow), dtype=arr.dtype)], axis=1)
    full = (arr.min(axis=0) == packed)
    k = 0
    while k < len(full) and full[k]:
        k += 1
    if k:
        arr = arr[:, k:]
        lo += k
    return arr, lo


def _ensemble_jgamma(spec, N, samples, rng):
    """Vectorized partial-exclusion engine.  Window columns are sites
    lo, lo+1, ...; sites < lo are packed at J+1 (they deterministically
    forward J arrows), sites past the window are empty."""
    J = int(spec.J)
    cap = J + 1
    arr = np.zeros((samples, 8), dtype=np.int16)
    lo = 1
    for t in range(N):
        total = J * t
        width = arr.shape[1]
        # Height at each window column, from the suffix sums.
        h = arr[:, ::-1].cumsum(axis=1)[:, ::-1]
        x = np.arange(lo, lo + width)
        ups = spec.gamma + 2.0 * h + (cap) * (x - 1) - J * t
        if ups.min() < spec.gamma - 1e-6:
            raise InadmissibleWeights(
                "Upsilon below gamma at time %d" % t)
        eta = arr
        p_low = (eta / cap) * (1.0 + (cap - eta) / ups)
        bad = (p_low < -_WEIGHT_NEG_TOL) | (p_low > 1 + _WEIGHT_NEG_TOL)
        if bad.any():
            raise InadmissibleWeights(
                "transfer probability out of [0,1] at time %d" % t)
        drop = (rng.random((samples, width)) < p_low) & (eta > 0)
        xs = eta - drop.astype(np.int16)  # arrows passed right
        inc = np.empty_like(xs)
        inc[:, 0] = J  # from the packed region / step data
        inc[:, 1:] = xs[:, :-1]
        arr = (inc - xs + eta).astype(np.int16)
        if arr.max() > cap or arr.min() < 0:
            raise InadmissibleWeights(
                "occupancy out of [0, J+1] at time %d" % (t + 1))
        arr, lo = _advance_window(arr, lo, cap)
    return _window_views(arr, lo, cap, J * N, N, samples)


def _ensemble_asym(spec, N, samples, rng):
    """Vectorized asymmetric capacity-2 engine."""
    q, delta = spec.q, spec.delta
    arr = np.zeros((samples, 8), dtype=np.int16)
    lo = 1
    for t in range(N):
        width = arr.shape[1]
        suf = arr[:, ::-1].cumsum(axis=1)[:, ::-1]
        x = np.arange(lo, lo + width)
        e = t - 2 * (x - 1) - 2 * suf  # kappa exponent per site
        if delta == 0.0:
            pr = np.full((samples, width), 1.0 / (q + 1.0))
        else:
            f = q ** np.abs(e)
            kap = delta * f
            kinv = f / delta
            with np.errstate(divide="ignore", invalid="ignore"):
                pr = np.where(
                    e >= 0,
                    (1.0 - q * kap) / ((q + 1.0) * (1.0 - kap)),
                    (kinv - q) / ((q + 1.0) * (kinv - 1.0)))
        bad = (pr < -_WEIGHT_NEG_TOL) | (pr > 1 + _WEIGHT_NEG_TOL)
        if bad.any():
            raise InadmissibleWeights(
                "jump probability out of [0,1] at time %d" % t)
        eta = arr
        j2 = np.where(eta == 2, 1,
                      np.where(eta == 1,
                               (rng.random((samples, width)) < pr)
                               .astype(np.int16), 0)).astype(np.int16)
        inc = np.empty_like(j2)
        inc[:, 0] = 1
        inc[:, 1:] = j2[:, :-1]
        arr = (eta + inc - j2).astype(np.int16)
        if arr.max() > 2 or arr.min() < 0:
            raise InadmissibleWeights(
                "occupancy out of [0, 2] at time %d" % (t + 1))
        arr, lo = _advance_window(arr, lo, 2)
    return _window_views(arr, lo, 2, N, N, samples)


def _window_views(arr, lo, packed, total, time, samples):
    width = arr.shape[1]
    suf = np.zeros((samples, width + 1), dtype=np.int64)
    suf[:, :width] = arr[:, ::-1].cumsum(axis=1)[:, ::-1]
    return [_WindowView(time, lo, packed, total, suf[i])
            for i in range(samples)]


def _ensemble_qhahn(spec, N, samples, rng):
    """Vectorized q-Hahn engine: per site, trajectories are grouped by
    (occupancy, height) and share one exact inverse-CDF table."""
    occ = np.zeros((samples, N + 2), dtype=np.int16)
    total = 0
    for t in range(N):
        y = t + 1
        j_in = np.full(samples, spec.row_degree(y), dtype=np.int16)
        pre = occ.copy()
        suf = pre[:, ::-1].cumsum(axis=1)[:, ::-1]
        for x in range(1, t + 3):
            i1 = pre[:, x - 1].astype(np.int64)
            h = suf[:, x - 1].astype(np.int64)
            if not h.any() and not j_in.any():
                break
            key = i1 * (total + 1) + h
            u = rng.random(samples)
            j2 = np.zeros(samples, dtype=np.int16)
            for kv in np.unique(key):
                mask = key == kv
                ik = int(i1[mask][0])
                hk = int(h[mask][0])
                if ik == 0:
                    continue
                w, _ = _weights_qhahn(spec, x, y, ik, hk)
                cdf = np.cumsum(w)
                j2[mask] = np.searchsorted(
                    cdf, u[mask], side="right").clip(0, ik)
            occ[:, x - 1] = i1 + j_in - j2
            j_in = j2
        if j_in.any():
            raise SizeLimit("horizontal propagation past the support")
        total += spec.row_degree(y)
    suf = np.zeros((samples, occ.shape[1] + 1), dtype=np.int64)
    suf[:, :-1] = occ[:, ::-1].cumsum(axis=1)[:, ::-1]
    return [_WindowView(N, 1, 0, int(suf[i, 0]), suf[i])
            for i in range(samples)]


_VECTOR_ENGINES = {
    "jgamma_pep": _ensemble_jgamma,
    "asym_pep": _ensemble_asym,
    "qhahn": _ensemble_qhahn,
}


def run_ensemble(spec, N, samples, base_seed, observables,
                 vectorized=None):
    """Independent trajectories; one MCEstimate per observable.

    Observables are callables evaluated on the final state (use
    `current(state, x)` for height observables).  The three degenerations
    with vectorized engines advance all trajectories in lockstep from a
    single generator split off (base_seed, 0); the scalar path gives each
    trajectory its own split (base_seed, index).  Both are deterministic
    given base_seed.
    """
    samples = int(samples)
    if samples < 1:
        raise ValueError("need at least one sample")
    if vectorized is None:
        vectorized = spec.variant in _VECTOR_ENGINES
    vals = np.zeros((len(observables), samples))
    if vectorized and spec.variant in _VECTOR_ENGINES:
        rng = _trajectory_rng(base_seed, 0)
        views = _VECTOR_ENGINES[spec.variant](spec, int(N), samples, rng)
        for i, view in enumerate(views):
            for k, obs in enumerate(observables):
                vals[k, i] = obs(view)
    else:
        for i in range(samples):
            state = initial_state(spec, rng=_trajectory_rng(base_seed, i))
            try:
                for _ in range(int(N)):
                    state = step(state, spec)
            except Exception as exc:
                raise type(exc)("trajectory %d: %s" % (i, exc)) from exc
            for k, obs in enumerate(observables):
                vals[k, i] = obs(state)
    out = []
    for k in range(len(observables)):
        mean = float(np.mean(vals[k]))
        std = float(np.std(vals[k], ddof=1)) if samples > 1 else 0.0
        out.append(MCEstimate(mean=mean, stderr=std / math.sqrt(samples),
                              n_samples=samples, base_seed=int(base_seed)))
    return out


# ---------------------------------------------------------------------------
# Exponent bookkeeping audit


def kappa_audit(spec, N, seed=0):
    """Run one scalar trajectory of a row-update model and check, at every
    visited vertex, that the incremental dynamical-parameter recursion
    (multiply by q^{J_y - 2 j1} moving up, by q^{2 i2} b_x moving right)
    reproduces the closed form q^{-2 h} * prod b * prod c exactly at the
    level of integer q-exponents.  Returns the number of vertices checked.
    """
    if spec.variant not in ("qhahn", "general", "asym_pep"):
        raise ValueError("kappa audit applies to row-update models")
    state = initial_state(spec, seed=seed)
    checked = 0
    # exponents[x] = integer q-exponent of kappa_{x, y} after row y,
    # relative to delta * prod_{k<x} b_k * prod_{k<=y} c_k.
    exponents = {1: 0}
    for t in range(N):
        pre = [int(v) for v in state.occupancy]
        state = step(state, spec)
        post = [int(v) for v in state.occupancy]
        y = t + 1
        # Recover the row data: j1 entering site x and i2 leaving above.
        j_in = spec.row_degree(y)
        x = 0
        row_j1 = {}
        while True:
            x += 1
            i1 = pre[x - 1] if x <= len(pre) else 0
            i2 = post[x - 1] if x <= len(post) else 0
            row_j1[x] = j_in
            j_out = i1 + j_in - i2
            if x > len(pre) and j_in == 0:
                break
            j_in = j_out
        max_x = x
        # Move every tracked exponent up one row (the c_y factor sits in
        # the reference product), then extend to the right.
        for xx in list(exponents):
            exponents[xx] -= 2 * row_j1.get(xx, 0)
        for xx in range(2, max_x + 1):
            if xx not in exponents:
                i2 = post[xx - 2] if xx - 2 < len(post) else 0
                exponents[xx] = exponents[xx - 1] + 2 * i2
        # Closed form: exponent of kappa_{x, y} is -2 h_y(x).
        h = sum(post)
        for xx in range(1, max_x + 1):
            closed = -2 * h
            if exponents[xx] != closed:
                raise AssertionError(
                    "kappa exponent mismatch at site %d after row %d: "
                    "incremental %d, closed %d"
                    % (xx, y, exponents[xx], closed))
            checked += 1
            h -= post[xx - 1] if xx - 1 < len(post) else 0
    return checked
