"""Constructive domains as finite unions of analytic primitives.

A domain is a union of primitives (half-space, ball, box, parabolic tube,
annulus), optionally intersected with a clipping ball.  Every primitive
supports three exact queries, all vectorized over point/segment batches:

* membership of a point,
* the parameter set {t in [0,1] : x + t(y-x) in primitive} of a segment,
  returned as a small fixed number of closed interval "slots",
* signed distance to the primitive boundary (positive inside).

Segment containment in the union is decided by covering [0,1] with the
interval slots of all primitives; distance to the union boundary is the
max of the signed distances (exact inside a single primitive, a documented
under-approximation where primitives overlap).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Absolute tolerance on segment parameters when deciding interval coverage.
# Open-set boundary cases are measure zero; the tolerance keeps them from
# flipping under refinement.
TAU_GEOM = 1e-9

_INF = np.inf


def _as_points(x):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.shape[-1] != 2:
        raise ValueError(f"expected 2D points, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

class Primitive:
    """Base of all primitive shapes; subclasses are immutable value objects."""

    #: True when the primitive is a convex set.  Unions of one convex
    #: primitive admit the trivial all-visible fast path.
    convex = True

    def contains_many(self, pts):
        raise NotImplementedError

    def segment_slots(self, X, V):
        """Interval slots of {t : X + t V in self} for a batch of segments.

        Returns a list of (lo, hi) float array pairs.  A slot with
        lo > hi is empty.  Slots are not clipped to [0,1]; the caller
        clips.  The union of the slots equals the exact parameter set up
        to the (measure zero) primitive boundary.
        """
        raise NotImplementedError

    def signed_distance(self, pts):
        """Distance to the primitive boundary, positive inside."""
        raise NotImplementedError

    def record(self):
        """Serialization record: (kind, params...)."""
        raise NotImplementedError


@dataclass(frozen=True)
class HalfSpace(Primitive):
    """Open half-space {x : n.x < c} with |n| = 1."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.hypot(n[0], n[1]))
        if norm == 0.0:
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", (n[0] / norm, n[1] / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def contains_many(self, pts):
        n = np.asarray(self.normal)
        return pts @ n < self.offset

    def segment_slots(self, X, V):
        n = np.asarray(self.normal)
        a = V @ n
        b = X @ n - self.offset          # f(t) = b + t a < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = -b / np.where(a == 0.0, 1.0, a)
        zero = a == 0.0
        lo = np.where(zero, np.where(b < 0, 0.0, 2.0),
                      np.where(a > 0, -_INF, tstar))
        hi = np.where(zero, np.where(b < 0, 1.0, -1.0),
                      np.where(a > 0, tstar, _INF))
        return [(lo, hi)]

    def signed_distance(self, pts):
        n = np.asarray(self.normal)
        return self.offset - pts @ n

    def record(self):
        return ("halfspace", self.normal[0], self.normal[1], self.offset)


@dataclass(frozen=True)
class Ball(Primitive):
    """Open ball {x : |x - center| < radius}."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def contains_many(self, pts):
        d = pts - np.asarray(self.center)
        return np.einsum("ij,ij->i", d, d) < self.radius ** 2

    def _roots(self, X, V):
        # |X + tV - c|^2 = r^2, returns (t_lo, t_hi), empty as (inf, -inf)
        P = X - np.asarray(self.center)
        A = np.einsum("ij,ij->i", V, V)
        B = 2.0 * np.einsum("ij,ij->i", V, P)
        C = np.einsum("ij,ij->i", P, P) - self.radius ** 2
        disc = B * B - 4.0 * A * C
        ok = (disc > 0.0) & (A > 0.0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(ok, (-B - sq) / (2.0 * A), _INF)
            t2 = np.where(ok, (-B + sq) / (2.0 * A), -_INF)
        degenerate = A == 0.0           # zero-length segment
        inside = C < 0.0
        t1 = np.where(degenerate, np.where(inside, -_INF, _INF), t1)
        t2 = np.where(degenerate, np.where(inside, _INF, -_INF), t2)
        return t1, t2

    def segment_slots(self, X, V):
        return [self._roots(X, V)]

    def signed_distance(self, pts):
        d = pts - np.asarray(self.center)
        return self.radius - np.sqrt(np.einsum("ij,ij->i", d, d))

    def record(self):
        return ("ball", self.center[0], self.center[1], self.radius)


@dataclass(frozen=True)
class Box(Primitive):
    """Open axis-aligned box; bounds may be infinite (slabs, half-slabs)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains_many(self, pts):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts > lo) & (pts < hi), axis=1)

    def segment_slots(self, X, V):
        t_in = np.full(X.shape[0], -_INF)
        t_out = np.full(X.shape[0], _INF)
        for d in range(2):
            v = V[:, d]
            a = self.lo[d] - X[:, d]
            b = self.hi[d] - X[:, d]
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = np.where(v == 0.0, 0.0, a) / np.where(v == 0.0, 1.0, v)
                tb = np.where(v == 0.0, 0.0, b) / np.where(v == 0.0, 1.0, v)
            enter = np.minimum(ta, tb)
            exit_ = np.maximum(ta, tb)
            zero = v == 0.0
            in_slab = (a < 0.0) & (b > 0.0)
            enter = np.where(zero, np.where(in_slab, -_INF, _INF), enter)
            exit_ = np.where(zero, np.where(in_slab, _INF, -_INF), exit_)
            t_in = np.maximum(t_in, enter)
            t_out = np.minimum(t_out, exit_)
        return [(t_in, t_out)]

    def signed_distance(self, pts):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        q = np.maximum(lo - pts, pts - hi)      # positive outside per axis
        m = np.max(q, axis=1)
        outside = np.sqrt(np.sum(np.maximum(q, 0.0) ** 2, axis=1))
        return np.where(m < 0.0, -m, -outside)

    def record(self):
        return ("box", self.lo[0], self.lo[1], self.hi[0], self.hi[1])


def _interval_difference(olo, ohi, ilo, ihi):
    """Slots of [olo,ohi] minus [ilo,ihi]; inner empty encoded inf/-inf."""
    s1 = (olo, np.minimum(ohi, ilo))
    s2 = (np.maximum(olo, ihi), ohi)
    return [s1, s2]


@dataclass(frozen=True)
class Annulus(Primitive):
    """Open annulus {x : r_in < |x - center| < r_out} (closed hole removed)."""

    center: tuple
    r_in: float
    r_out: float
    convex = False

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ValueError("annulus needs 0 < r_in < r_out")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    def contains_many(self, pts):
        d = pts - np.asarray(self.center)
        r2 = np.einsum("ij,ij->i", d, d)
        return (r2 > self.r_in ** 2) & (r2 < self.r_out ** 2)

    def segment_slots(self, X, V):
        outer = Ball(self.center, self.r_out)._roots(X, V)
        inner = Ball(self.center, self.r_in)._roots(X, V)
        return _interval_difference(outer[0], outer[1], inner[0], inner[1])

    def signed_distance(self, pts):
        d = pts - np.asarray(self.center)
        rho = np.sqrt(np.einsum("ij,ij->i", d, d))
        return np.minimum(self.r_out - rho, rho - self.r_in)

    def record(self):
        return ("annulus", self.center[0], self.center[1], self.r_in, self.r_out)


@dataclass(frozen=True)
class ParabolicTube(Primitive):
    """Open tube {(x1,x2) : |x2 - (a x1^2 - a)| < w} around a parabola.

    The curve x2 = a x1^2 - a dips to -a at x1 = 0 and returns to 0 at
    x1 = +-1, so with the default amplitude the tube mouth lines up with
    the half-planes {x1 < -1}, {x1 > 1}.  Not convex.
    """

    amplitude: float = 2.0
    radius: float = 1.0
    convex = False

    def __post_init__(self):
        if not (self.amplitude > 0 and self.radius > 0):
            raise ValueError("tube amplitude and radius must be positive")

    def _q(self, pts):
        # vertical offset from the axis curve
        return pts[:, 1] - self.amplitude * pts[:, 0] ** 2 + self.amplitude

    def contains_many(self, pts):
        return np.abs(self._q(pts)) < self.radius

    def segment_slots(self, X, V):
        a, w = self.amplitude, self.radius
        # q(t) = alpha t^2 + beta t + gamma along the segment
        alpha = -a * V[:, 0] ** 2
        beta = V[:, 1] - 2.0 * a * X[:, 0] * V[:, 0]
        gamma = X[:, 1] - a * X[:, 0] ** 2 + a

        # concave case: {q > -w} is an interval, {q < w} two rays
        discA = beta * beta - 4.0 * alpha * (gamma + w)
        okA = (discA > 0.0) & (alpha < 0.0)
        sqA = np.sqrt(np.where(okA, discA, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(okA, (-beta + sqA) / (2.0 * alpha), _INF)
            r2 = np.where(okA, (-beta - sqA) / (2.0 * alpha), -_INF)
        discB = beta * beta - 4.0 * alpha * (gamma - w)
        okB = (discB > 0.0) & (alpha < 0.0)
        sqB = np.sqrt(np.where(okB, discB, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            s1 = np.where(okB, (-beta + sqB) / (2.0 * alpha), _INF)
            s2 = np.where(okB, (-beta - sqB) / (2.0 * alpha), -_INF)

        # linear case alpha == 0 (vertical-progress-free segments)
        lin = alpha == 0.0
        if np.any(lin):
            with np.errstate(divide="ignore", invalid="ignore"):
                bsafe = np.where(beta == 0.0, 1.0, beta)
                tA = -(gamma + w) / bsafe      # q = -w crossing
                tB = (w - gamma) / bsafe       # q = +w crossing
            t_lo = np.where(beta > 0, tA, tB)
            t_hi = np.where(beta > 0, tB, tA)
            const_in = np.abs(gamma) < w
            flat = beta == 0.0
            t_lo = np.where(flat, np.where(const_in, -_INF, _INF), t_lo)
            t_hi = np.where(flat, np.where(const_in, _INF, -_INF), t_hi)
            r1 = np.where(lin, t_lo, r1)
            r2 = np.where(lin, t_hi, r2)
            s1 = np.where(lin, _INF, s1)
            s2 = np.where(lin, -_INF, s2)

        return _interval_difference(r1, r2, s1, s2)

    def signed_distance(self, pts):
        pts = np.atleast_2d(pts)
        a, w = self.amplitude, self.radius
        out = np.empty(pts.shape[0])
        for i, (px, py) in enumerate(pts):
            best = _INF
            for sigma in (w, -w):
                # minimize (u-px)^2 + (a u^2 - a + sigma - py)^2 over u
                c0 = sigma - a - py
                roots = np.roots([2.0 * a * a, 0.0, 2.0 * a * c0 + 1.0, -px])
                u = roots[np.abs(roots.imag) < 1e-9].real
                if u.size == 0:
                    continue
                d2 = (u - px) ** 2 + (a * u * u - a + sigma - py) ** 2
                best = min(best, float(np.sqrt(d2.min())))
            q = py - a * px * px + a
            out[i] = best if abs(q) < w else -best
        return out

    def record(self):
        return ("tube", self.amplitude, self.radius)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DumbbellMeta:
    """Which primitives form the bells and the corridor of a dumbbell."""

    minus_ids: tuple
    corridor_ids: tuple
    plus_ids: tuple
    gamma_star_lo: tuple
    gamma_star_hi: tuple
    x0: tuple = (0.0, 0.0)
    gamma_tilde_id: int | None = None


@dataclass(frozen=True)
class DomainSpec:
    """Finite union of primitives, optionally clipped to a ball."""

    primitives: tuple
    clip: Ball | None = None
    dumbbell: DumbbellMeta | None = None
    name: str = "domain"

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if not self.primitives:
            raise ValueError("domain needs at least one primitive")

    @property
    def all_visible(self):
        """True when every segment between interior points stays inside."""
        return len(self.primitives) == 1 and self.primitives[0].convex

    # -- membership --------------------------------------------------------

    def contains_many(self, pts):
        pts = _as_points(pts)
        inside = np.zeros(pts.shape[0], dtype=bool)
        for prim in self.primitives:
            inside |= prim.contains_many(pts)
        if self.clip is not None:
            inside &= self.clip.contains_many(pts)
        return inside

    def contains(self, x):
        if not np.all(np.isfinite(x)):
            raise ValueError("point must be finite")
        return bool(self.contains_many(np.asarray(x, dtype=float)[None, :])[0])

    # -- segment containment ------------------------------------------------

    def segment_inside_many(self, X, Y):
        """Vectorized visibility: does each segment X[i]--Y[i] stay in D?

        Both endpoints are assumed to lie in the domain.  The clip ball is
        convex, so it never cuts a segment between interior points and is
        ignored here.
        """
        X = _as_points(X)
        Y = _as_points(Y)
        V = Y - X
        slots = []
        for prim in self.primitives:
            slots.extend(prim.segment_slots(X, V))
        los = [np.clip(lo, 0.0, 1.0) for lo, hi in slots]
        his = [np.clip(hi, 0.0, 1.0) for lo, hi in slots]
        cover = np.zeros(X.shape[0])
        # fixed-point sweep: len(slots) passes reach the transitive closure
        # of overlapping intervals regardless of their order
        for _ in range(len(slots)):
            for lo, hi in zip(los, his):
                cover = np.where(lo <= cover + TAU_GEOM,
                                 np.maximum(cover, hi), cover)
        return cover >= 1.0 - TAU_GEOM

    def segment_inside(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not self.contains(x):
            raise ValueError(f"segment endpoint {tuple(x)} lies outside the domain")
        if not self.contains(y):
            raise ValueError(f"segment endpoint {tuple(y)} lies outside the domain")
        if np.array_equal(x, y):
            return True
        if self.all_visible:
            return True
        return bool(self.segment_inside_many(x[None, :], y[None, :])[0])

    # -- boundary distance --------------------------------------------------

    def boundary_distance_many(self, pts):
        """max over primitives of signed distance, clipped; exact inside a
        single primitive, an under-approximation on overlaps (the ball of
        that radius is still contained in the domain)."""
        pts = _as_points(pts)
        sd = np.full(pts.shape[0], -_INF)
        for prim in self.primitives:
            sd = np.maximum(sd, prim.signed_distance(pts))
        if self.clip is not None:
            sd = np.minimum(sd, self.clip.signed_distance(pts))
        return sd

    def boundary_distance(self, x):
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise ValueError(f"point {tuple(x)} lies outside the domain")
        return float(self.boundary_distance_many(x[None, :])[0])

    # -- misc ----------------------------------------------------------------

    def bounding_box(self):
        """Finite bounding box; raises when the domain is unbounded."""
        if self.clip is not None:
            c = np.asarray(self.clip.center)
            r = self.clip.radius
            return c - r, c + r
        lo = np.full(2, _INF)
        hi = np.full(2, -_INF)
        for prim in self.primitives:
            if isinstance(prim, Ball):
                c = np.asarray(prim.center)
                lo = np.minimum(lo, c - prim.radius)
                hi = np.maximum(hi, c + prim.radius)
            elif isinstance(prim, Annulus):
                c = np.asarray(prim.center)
                lo = np.minimum(lo, c - prim.r_out)
                hi = np.maximum(hi, c + prim.r_out)
            elif isinstance(prim, Box):
                lo = np.minimum(lo, prim.lo)
                hi = np.maximum(hi, prim.hi)
            else:
                raise ValueError(
                    f"domain with a {type(prim).__name__} is unbounded; clip it first")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("domain is unbounded; clip it first")
        return lo, hi

    def region_tags(self, pts):
        """Dumbbell region tag per point: 0 other, 1 bell-, 2 corridor*, 3 bell+."""
        if self.dumbbell is None:
            raise ValueError("domain has no dumbbell metadata")
        pts = _as_points(pts)
        meta = self.dumbbell

        def member(ids):
            m = np.zeros(pts.shape[0], dtype=bool)
            for i in ids:
                m |= self.primitives[i].contains_many(pts)
            return m

        tag = np.zeros(pts.shape[0], dtype=np.int8)
        minus = member(meta.minus_ids)
        plus = member(meta.plus_ids)
        corr = member(meta.corridor_ids)
        tag[minus] = TAG_MINUS
        tag[plus] = TAG_PLUS
        tag[corr & ~minus & ~plus] = TAG_STAR
        return tag


TAG_OTHER, TAG_MINUS, TAG_STAR, TAG_PLUS = 0, 1, 2, 3
TAG_NAMES = {TAG_OTHER: "other", TAG_MINUS: "bell-", TAG_STAR: "corridor*",
             TAG_PLUS: "bell+"}


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_dumbbell(variant="straight", tube_radius=1.0):
    """Two half-planes joined by a corridor of the given radius.

    ``straight`` uses the slab {|x2| < r}; every left-right crossing can be
    seen through it, and the slab doubles as the convex sub-corridor used
    by the convex sub-corridor overlap checks.  ``curved`` uses the parabolic tube,
    which blocks all direct left-right visibility.
    """
    if tube_radius <= 0:
        raise ValueError("tube_radius must be positive")
    r = float(tube_radius)
    minus = HalfSpace(normal=(1.0, 0.0), offset=-1.0)     # x1 < -1
    plus = HalfSpace(normal=(-1.0, 0.0), offset=-1.0)     # x1 > 1
    if variant == "straight":
        corridor = Box(lo=(-_INF, -r), hi=(_INF, r))
        gamma_tilde_id = 1
    elif variant == "curved":
        corridor = ParabolicTube(amplitude=2.0, radius=r)
        gamma_tilde_id = None
    else:
        raise ValueError(f"unknown dumbbell variant {variant!r}")
    meta = DumbbellMeta(
        minus_ids=(0,), corridor_ids=(1,), plus_ids=(2,),
        gamma_star_lo=(-1.0, -r - 2.0), gamma_star_hi=(1.0, r),
        x0=(0.0, 0.0), gamma_tilde_id=gamma_tilde_id)
    return DomainSpec(primitives=(minus, corridor, plus), dumbbell=meta,
                      name=f"{variant}-dumbbell")


def make_annulus(r_in=1.0 / 3.0, r_out=1.0):
    return DomainSpec(primitives=(Annulus((0.0, 0.0), r_in, r_out),),
                      name=f"annulus:{r_in:g},{r_out:g}")


def make_box(a=1.0, b=1.0):
    return DomainSpec(primitives=(Box((0.0, 0.0), (float(a), float(b))),),
                      name=f"box:{a:g},{b:g}")


def clip_ball(domain, x0, R):
    """Intersect the domain with the open ball B(x0, R)."""
    if R <= 0:
        raise ValueError("clip radius must be positive")
    return replace(domain, clip=Ball(tuple(float(v) for v in x0), float(R)))


def parse_domain(text):
    """Parse a CLI domain name.

    Accepted: ``straight-dumbbell``, ``curved-dumbbell``,
    ``annulus:<rin>,<rout>``, ``box:<a>,<b>``.
    """
    if text == "straight-dumbbell":
        return make_dumbbell("straight")
    if text == "curved-dumbbell":
        return make_dumbbell("curved")
    if text.startswith("annulus:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValueError(f"annulus spec needs two radii: {text!r}")
        return make_annulus(float(parts[0]), float(parts[1]))
    if text.startswith("box:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValueError(f"box spec needs two side lengths: {text!r}")
        return make_box(float(parts[0]), float(parts[1]))
    raise ValueError(f"unknown domain {text!r}")


# ---------------------------------------------------------------------------
# serialization (one primitive per record, decimal fields)
# ---------------------------------------------------------------------------

def domain_to_text(domain):
    lines = [f"name {domain.name}"]
    for prim in domain.primitives:
        rec = prim.record()
        lines.append("primitive " + " ".join(str(v) for v in rec))
    if domain.clip is not None:
        lines.append(f"clip {domain.clip.center[0]} {domain.clip.center[1]} "
                     f"{domain.clip.radius}")
    if domain.dumbbell is not None:
        m = domain.dumbbell
        gt = "none" if m.gamma_tilde_id is None else str(m.gamma_tilde_id)
        lines.append(
            "dumbbell minus={} corridor={} plus={} x0={},{} "
            "gammastar={},{},{},{} gammatilde={}".format(
                ",".join(map(str, m.minus_ids)),
                ",".join(map(str, m.corridor_ids)),
                ",".join(map(str, m.plus_ids)),
                m.x0[0], m.x0[1],
                m.gamma_star_lo[0], m.gamma_star_lo[1],
                m.gamma_star_hi[0], m.gamma_star_hi[1], gt))
    return "\n".join(lines) + "\n"


_PRIM_PARSERS = {
    "halfspace": lambda p: HalfSpace((p[0], p[1]), p[2]),
    "ball": lambda p: Ball((p[0], p[1]), p[2]),
    "box": lambda p: Box((p[0], p[1]), (p[2], p[3])),
    "tube": lambda p: ParabolicTube(p[0], p[1]),
    "annulus": lambda p: Annulus((p[0], p[1]), p[2], p[3]),
}


def domain_from_text(text):
    prims = []
    clip = None
    meta = None
    name = "domain"
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "name":
            name = rest.strip()
        elif head == "primitive":
            kind, *params = rest.split()
            if kind not in _PRIM_PARSERS:
                raise ValueError(f"unknown primitive kind {kind!r}")
            prims.append(_PRIM_PARSERS[kind]([float(v) for v in params]))
        elif head == "clip":
            cx, cy, r = (float(v) for v in rest.split())
            clip = Ball((cx, cy), r)
        elif head == "dumbbell":
            kv = dict(item.split("=", 1) for item in rest.split())
            ids = lambda s: tuple(int(v) for v in kv[s].split(","))
            gs = [float(v) for v in kv["gammastar"].split(",")]
            x0 = tuple(float(v) for v in kv["x0"].split(","))
            gt = kv.get("gammatilde", "none")
            meta = DumbbellMeta(
                minus_ids=ids("minus"), corridor_ids=ids("corridor"),
                plus_ids=ids("plus"), gamma_star_lo=(gs[0], gs[1]),
                gamma_star_hi=(gs[2], gs[3]), x0=x0,
                gamma_tilde_id=None if gt == "none" else int(gt))
        else:
            raise ValueError(f"unparseable domain line {line!r}")
    return DomainSpec(primitives=tuple(prims), clip=clip, dumbbell=meta,
                      name=name)


# ---------------------------------------------------------------------------
# dumbbell structure report
# ---------------------------------------------------------------------------

#: Fixed acceptance band for |bell cap B(x0,R)| / R^d across the sweep.
BELL_RATIO_BAND = (0.3, 2.5)
#: Fixed band for the convex-subcorridor overlap |gamma-tilde cap bell_R| / R.
TILDE_RATIO_BAND = (0.5, 4.0)


@dataclass
class DumbbellStructureReport:
    ok: bool
    violated: list
    bell_ratios: dict = field(default_factory=dict)   # R -> (minus, plus)
    tilde_ratios: dict = field(default_factory=dict)  # R -> (minus, plus)
    corridor_overlap_hits: tuple = (0, 0)
    gamma_star_bounded: bool = True
    gamma_tilde_present: bool = False

    def summary_lines(self):
        lines = [f"dumbbell_structure_pass={self.ok}"]
        if self.violated:
            lines.append("violated=" + ";".join(self.violated))
        for R in sorted(self.bell_ratios):
            m, p = self.bell_ratios[R]
            lines.append(f"bell_ratio R={R} minus={m:.6g} plus={p:.6g}")
        for R in sorted(self.tilde_ratios):
            m, p = self.tilde_ratios[R]
            lines.append(f"tilde_ratio R={R} minus={m:.6g} plus={p:.6g}")
        lines.append("gamma_tilde=" +
                      ("present" if self.gamma_tilde_present else "absent"))
        return lines


def audit_dumbbell_structure(domain, R_list=(8, 16, 32), n_samples=40000, seed=0):
    """Monte Carlo audit of the dumbbell volume-growth structure.

    Estimates |bell cap B(x0,R)| / R^2 for both bells at each R and checks
    the ratios sit in a fixed band, that the corridor remainder is bounded
    (metadata), that both bells overlap the corridor, and, when a convex
    sub-corridor is present, that its overlap with the clipped bells grows
    linearly in R.
    """
    if domain.dumbbell is None:
        raise ValueError("dumbbell structure audit needs dumbbell metadata")
    meta = domain.dumbbell
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6E0A]))
    x0 = np.asarray(meta.x0)
    violated = []
    report = DumbbellStructureReport(ok=True, violated=violated)
    report.gamma_star_bounded = all(
        np.isfinite(meta.gamma_star_lo)) and all(np.isfinite(meta.gamma_star_hi))
    if not report.gamma_star_bounded:
        violated.append("gamma_star_unbounded")
    tilde = (None if meta.gamma_tilde_id is None
             else domain.primitives[meta.gamma_tilde_id])
    report.gamma_tilde_present = tilde is not None

    def members(ids, pts):
        m = np.zeros(pts.shape[0], dtype=bool)
        for i in ids:
            m |= domain.primitives[i].contains_many(pts)
        return m

    for R in R_list:
        pts = x0 + rng.uniform(-R, R, size=(n_samples, 2))
        in_ball = np.einsum("ij,ij->i", pts - x0, pts - x0) < R * R
        box_area = 4.0 * R * R
        minus = members(meta.minus_ids, pts) & in_ball
        plus = members(meta.plus_ids, pts) & in_ball
        ratios = (minus.mean() * box_area / R ** 2,
                  plus.mean() * box_area / R ** 2)
        report.bell_ratios[R] = ratios
        for side, val in zip(("minus", "plus"), ratios):
            if not BELL_RATIO_BAND[0] <= val <= BELL_RATIO_BAND[1]:
                violated.append(f"bell_growth_{side}_R={R}")
        if tilde is not None:
            in_tilde = tilde.contains_many(pts) & in_ball
            tr = ((in_tilde & members(meta.minus_ids, pts)).mean() * box_area / R,
                  (in_tilde & members(meta.plus_ids, pts)).mean() * box_area / R)
            report.tilde_ratios[R] = tr
            for side, val in zip(("minus", "plus"), tr):
                if not TILDE_RATIO_BAND[0] <= val <= TILDE_RATIO_BAND[1]:
                    violated.append(f"tilde_overlap_{side}_R={R}")

    # the bells must overlap the corridor on a set of positive measure
    Rprobe = max(R_list)
    pts = x0 + rng.uniform(-Rprobe, Rprobe, size=(n_samples, 2))
    corr = members(meta.corridor_ids, pts)
    hits = (int((corr & members(meta.minus_ids, pts)).sum()),
            int((corr & members(meta.plus_ids, pts)).sum()))
    report.corridor_overlap_hits = hits
    if hits[0] == 0:
        violated.append("corridor_bell_minus_overlap_empty")
    if hits[1] == 0:
        violated.append("corridor_bell_plus_overlap_empty")

    report.ok = not violated
    return report
