"""Whitney decomposition, admissible chains, and chain-style domain audits.

The decomposition subdivides the bounding box top-down and accepts a
dyadic cube Q once the sandwich  diam(Q) <= dist(Q, bdry D) <= 4 diam(Q)
is certified: the lower bound through an exact (or Lipschitz-slack)
minimum of the boundary-distance field over the cube, the upper bound
through the field at the cube center.  Boundary-hugging cubes recurse to
``max_level`` and the uncovered sliver is reported as residual measure.

Level-L cubes have side  base * 2^-L  with base a quarter of the
bounding-box side, so level 0 starts below the domain scale and the
finest cells at the default audit depth resolve the boundary to ~1e-3
of the box.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import geometry

#: cube-side window, relative to |x-y|, for comparable-size path cubes;
#: the floor matches the diam-normalized sandwich (diam <= dist <= 4 diam),
#: under which the largest cube side is ~dist/sqrt(2) of the side-based one
SIZE_WINDOW = (1.0 / 16.0, 1.0)
#: node-expansion budget per chain search
SEARCH_BUDGET = 100_000


@dataclass(frozen=True)
class WhitneyCube:
    level: int
    anchor: tuple            # lattice position at this level
    side: float
    lo: tuple
    hi: tuple

    @property
    def center(self):
        return tuple((a + b) / 2.0 for a, b in zip(self.lo, self.hi))

    @property
    def diam(self):
        return self.side * np.sqrt(len(self.lo))

    def corners(self):
        dim = len(self.lo)
        out = []
        for mask in range(1 << dim):
            out.append(tuple(self.hi[d] if (mask >> d) & 1 else self.lo[d]
                             for d in range(dim)))
        return np.asarray(out)


def _exact_min_sd(prim, lo, hi, corners):
    """Exact min over the box of the primitive's signed distance, or None."""
    if isinstance(prim, geometry.HalfSpace):
        return float(prim.signed_distance(corners).min())
    if isinstance(prim, geometry.Ball):
        c = np.asarray(prim.center)
        far = np.sqrt(np.max(np.einsum("ij,ij->i", corners - c, corners - c)))
        return float(prim.radius - far)
    if isinstance(prim, geometry.Annulus):
        c = np.asarray(prim.center)
        far = np.sqrt(np.max(np.einsum("ij,ij->i", corners - c, corners - c)))
        near_pt = np.clip(c, lo, hi)
        near = float(np.hypot(*(near_pt - c)))
        return float(min(prim.r_out - far, near - prim.r_in))
    if isinstance(prim, geometry.Box):
        sd = prim.signed_distance(corners)
        if np.all(sd > 0.0):             # wall distances are linear inside
            return float(sd.min())
        return None
    return None


def _min_delta_lower_bound(domain, cube, center_delta):
    """Certified lower bound on min over the cube of boundary_distance.

    The 1-Lipschitz center bound always applies; exact per-primitive box
    minima sharpen it where available (the union field is a max of the
    primitive fields, the clip then caps it from above).
    """
    lipschitz = center_delta - cube.diam / 2.0
    if not isinstance(domain, geometry.DomainSpec):
        return lipschitz
    corners = cube.corners()
    lo = np.asarray(cube.lo)
    hi = np.asarray(cube.hi)
    union = -np.inf
    for prim in domain.primitives:
        ex = _exact_min_sd(prim, lo, hi, corners)
        if ex is not None and ex > union:
            union = ex
    exact = union
    if domain.clip is not None:
        clip_ex = _exact_min_sd(domain.clip, lo, hi, corners)
        exact = min(exact, clip_ex)          # clip intersects the union
    return max(lipschitz, exact)


@dataclass
class WhitneyDecomposition:
    domain: object
    cubes: list
    base: float
    max_level: int
    dim: int
    bbox_lo: tuple
    bbox_hi: tuple
    _centers: np.ndarray = None
    _sides: np.ndarray = None
    _adjacency: list = None

    @property
    def n_cubes(self):
        return len(self.cubes)

    @property
    def centers(self):
        if self._centers is None:
            self._centers = np.asarray([c.center for c in self.cubes])
        return self._centers

    @property
    def sides(self):
        if self._sides is None:
            self._sides = np.asarray([c.side for c in self.cubes])
        return self._sides

    def set_distance(self, qi, si):
        """Euclidean distance between the two closed cubes."""
        a, b = self.cubes[qi], self.cubes[si]
        gaps = np.maximum(0.0, np.maximum(np.asarray(a.lo) - np.asarray(b.hi),
                                          np.asarray(b.lo) - np.asarray(a.hi)))
        return float(np.sqrt(np.sum(gaps ** 2)))

    def long_distance(self, qi, si):
        a, b = self.cubes[qi], self.cubes[si]
        return a.side + self.set_distance(qi, si) + b.side

    def adjacency(self):
        """Neighbor lists under closed-cube touching (corner contact counts)."""
        if self._adjacency is not None:
            return self._adjacency
        n = self.n_cubes
        order = np.argsort(self.centers[:, 0], kind="stable")
        cx = self.centers[order, 0]
        tol = 1e-9 * self.base
        max_side = float(self.sides.max())
        adj = [[] for _ in range(n)]
        for pos, i in enumerate(order):
            reach = (self.sides[i] + max_side) / 2.0 + tol
            lo = np.searchsorted(cx, self.centers[i, 0] - reach)
            hi = np.searchsorted(cx, self.centers[i, 0] + reach)
            cand = order[lo:hi]
            cand = cand[cand > i]
            if cand.size == 0:
                continue
            half = (self.sides[i] + self.sides[cand]) / 2.0 + tol
            gap = np.abs(self.centers[cand] - self.centers[i]) - half[:, None]
            touch = np.all(gap <= 0.0, axis=1)
            for j in cand[touch]:
                adj[i].append(int(j))
                adj[int(j)].append(int(i))
        self._adjacency = [sorted(x) for x in adj]
        return self._adjacency

    def dump_csv(self, path):
        with open(path, "w") as fh:
            fh.write("level,side," +
                     ",".join(f"lo{d}" for d in range(self.dim)) + "," +
                     ",".join(f"hi{d}" for d in range(self.dim)) + "\n")
            for c in self.cubes:
                fh.write(f"{c.level},{c.side!r}," +
                         ",".join(repr(v) for v in c.lo) + "," +
                         ",".join(repr(v) for v in c.hi) + "\n")


def whitney_decompose(domain, max_level=8):
    """Dyadic Whitney cubes of a bounded domain (clip unbounded ones first)."""
    bb_lo, bb_hi = domain.bounding_box()
    bb_lo = np.asarray(bb_lo, dtype=float)
    bb_hi = np.asarray(bb_hi, dtype=float)
    dim = bb_lo.shape[0]
    side0 = float(np.max(bb_hi - bb_lo))
    base = side0 / 4.0

    cubes = []
    # level-0 tiling of the box with side-base cubes
    counts = np.maximum(1, np.ceil((bb_hi - bb_lo) / base - 1e-12).astype(int))
    queue = []
    for anchor in np.ndindex(*counts):
        queue.append((0, anchor))

    def bounds(level, anchor):
        side = base * 2.0 ** (-level)
        lo = bb_lo + np.asarray(anchor) * side
        return side, lo, lo + side

    while queue:
        level, anchor = queue.pop()
        side, lo, hi = bounds(level, anchor)
        cube = WhitneyCube(level=level, anchor=tuple(int(a) for a in anchor),
                           side=side, lo=tuple(lo), hi=tuple(hi))
        center = np.asarray(cube.center)
        delta = float(domain.boundary_distance_many(center[None, :])[0])
        # wholly outside: boundary_distance is -dist(x, D) out there
        if delta + cube.diam / 2.0 <= 0.0:
            continue
        lower = _min_delta_lower_bound(domain, cube, delta)
        if lower >= cube.diam and delta <= 4.0 * cube.diam:
            cubes.append(cube)
            continue
        if level >= max_level:
            continue                      # boundary sliver, reported below
        for child in np.ndindex(*(2,) * dim):
            queue.append((level + 1,
                          tuple(2 * a + c for a, c in zip(anchor, child))))

    cubes.sort(key=lambda c: (c.level, c.anchor))
    return WhitneyDecomposition(domain=domain, cubes=cubes, base=base,
                                max_level=max_level, dim=dim,
                                bbox_lo=tuple(bb_lo), bbox_hi=tuple(bb_hi))


def coverage_residual(decomp, oversample=2):
    """(residual measure, domain measure) from a deterministic lattice.

    Rasterizes the accepted cubes on a midpoint lattice finer than the
    finest cube and measures the part of the domain left uncovered.
    """
    finest = decomp.base * 2.0 ** (-decomp.max_level)
    step = finest / oversample
    lo = np.asarray(decomp.bbox_lo)
    hi = np.asarray(decomp.bbox_hi)
    counts = np.ceil((hi - lo) / step).astype(int)
    covered = np.zeros(tuple(counts), dtype=bool)
    for c in decomp.cubes:
        i0 = np.floor((np.asarray(c.lo) - lo) / step + 0.5).astype(int)
        i1 = np.floor((np.asarray(c.hi) - lo) / step + 0.5).astype(int)
        sl = tuple(slice(max(0, a), min(n, b))
                   for a, b, n in zip(i0, i1, counts))
        covered[sl] = True

    cell = step ** decomp.dim
    residual = 0.0
    measure = 0.0
    # row-blocked membership to bound memory on fine lattices
    axes = [lo[d] + (np.arange(counts[d]) + 0.5) * step
            for d in range(decomp.dim)]
    block = max(1, int(2_000_000 // max(1, np.prod(counts[1:]))))
    for start in range(0, counts[0], block):
        stop = min(start + block, counts[0])
        mesh_axes = np.meshgrid(axes[0][start:stop], *axes[1:], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh_axes], axis=1)
        if decomp.dim == 1:
            inside = decomp.domain.contains_many_1d(pts[:, 0])
        else:
            inside = decomp.domain.contains_many(pts)
        cov = covered[start:stop].ravel()
        measure += float(inside.sum()) * cell
        residual += float((inside & ~cov).sum()) * cell
    return residual, measure


def check_sandwich(decomp):
    """Re-verify diam <= dist <= 4 diam for every accepted cube.

    Checks the implied necessary conditions on the domain's distance
    field: every corner and the center sit at least diam from the
    boundary, the certified cube minimum reaches diam, and the center
    value caps dist(Q, bdry) at 4 diam.
    """
    bad = []
    for k, cube in enumerate(decomp.cubes):
        pts = np.vstack([cube.corners(), np.asarray(cube.center)[None, :]])
        dvals = decomp.domain.boundary_distance_many(pts)
        center_delta = float(dvals[-1])
        lower = _min_delta_lower_bound(decomp.domain, cube, center_delta)
        if not (dvals.min() >= cube.diam - 1e-12
                and lower >= cube.diam - 1e-12
                and center_delta <= 4.0 * cube.diam + 1e-12):
            bad.append(k)
    return bad


def disjoint_interiors(decomp):
    """True when no two cubes overlap on an open set (dyadic check)."""
    seen = set()
    for c in decomp.cubes:
        key = (c.level, c.anchor)
        if key in seen:
            return False
        seen.add(key)
    # a cube's strict ancestors must not be present
    for c in decomp.cubes:
        level, anchor = c.level, c.anchor
        while level > 0:
            level -= 1
            anchor = tuple(a // 2 for a in anchor)
            if (level, anchor) in seen:
                return False
    return True


# ---------------------------------------------------------------------------
# admissible chains
# ---------------------------------------------------------------------------

@dataclass
class Chain:
    indices: list                  # cube indices along the chain
    epsilon: float
    j0: int                        # central position (0-based)
    length: float                  # sum of cube sides

    def reversed(self):
        return Chain(indices=list(reversed(self.indices)), epsilon=self.epsilon,
                     j0=len(self.indices) - 1 - self.j0, length=self.length)


def _central_index(decomp, path, eps):
    """Smallest valid central position, or None."""
    k = len(path)
    q, s = path[0], path[-1]
    sides = [decomp.cubes[i].side for i in path]
    pref = [sides[j] >= eps * decomp.long_distance(q, path[j]) for j in range(k)]
    suff = [sides[j] >= eps * decomp.long_distance(path[j], s) for j in range(k)]
    pref_all = np.cumprod(pref).astype(bool)           # pref holds up to j
    suff_all = np.cumprod(suff[::-1])[::-1].astype(bool)
    for j0 in range(k):
        if pref_all[j0] and suff_all[j0]:
            return j0
    return None


def validate_chain(decomp, chain):
    """Re-check the three admissibility clauses from scratch."""
    idx = chain.indices
    for a, b in zip(idx[:-1], idx[1:]):
        if decomp.set_distance(a, b) > 1e-9 * decomp.base:
            return False
    total = sum(decomp.cubes[i].side for i in idx)
    if total > decomp.long_distance(idx[0], idx[-1]) / chain.epsilon + 1e-12:
        return False
    j0 = chain.j0
    eps = chain.epsilon
    q, s = idx[0], idx[-1]
    for j, c in enumerate(idx):
        side = decomp.cubes[c].side
        if j <= j0 and side < eps * decomp.long_distance(q, c) - 1e-12:
            return False
        if j >= j0 and side < eps * decomp.long_distance(c, s) - 1e-12:
            return False
    return True


def _dijkstra_feasible(decomp, start, feasible, limit, budget):
    """Min side-length-sum tree over nodes passing the per-node predicate."""
    adj = decomp.adjacency()
    best = {start: decomp.cubes[start].side}
    parent = {start: -1}
    heap = [(best[start], start)]
    expansions = 0
    while heap and expansions < budget:
        cost, node = heapq.heappop(heap)
        if cost > best.get(node, np.inf):
            continue
        expansions += 1
        for nxt in adj[node]:
            ncost = cost + decomp.cubes[nxt].side
            if (ncost <= limit + 1e-12 and ncost < best.get(nxt, np.inf)
                    and feasible(nxt)):
                best[nxt] = ncost
                parent[nxt] = node
                heapq.heappush(heap, (ncost, nxt))
    return best, parent


def _walk_back(parent, node):
    path = []
    while node != -1:
        path.append(node)
        node = parent[node]
    path.reverse()
    return path


def find_admissible_chain(decomp, qi, si, eps, budget=SEARCH_BUDGET):
    """Search for an eps-admissible chain from cube qi to si.

    Admissible chains grow away from both endpoints and meet at a
    central cube, so the search mirrors that shape: one Dijkstra tree
    from Q over cubes satisfying the Q-side growth condition, one from S
    over the S-side condition, joined at the cube minimizing the total
    side-length sum within the D(Q,S)/eps budget.  The central-cube
    condition then holds at the junction by construction; the returned
    chain is still re-validated from scratch.  None means the search
    gave up within its budget, never that no chain exists.
    """
    cubes = decomp.cubes
    if qi == si:
        chain = Chain([qi], eps, 0, cubes[qi].side)
        return chain if validate_chain(decomp, chain) else None
    limit = decomp.long_distance(qi, si) / eps
    tol = 1e-12

    from_q, parent_q = _dijkstra_feasible(
        decomp, qi,
        lambda p: cubes[p].side >= eps * decomp.long_distance(qi, p) - tol,
        limit, budget // 2)
    from_s, parent_s = _dijkstra_feasible(
        decomp, si,
        lambda p: cubes[p].side >= eps * decomp.long_distance(p, si) - tol,
        limit, budget // 2)

    best_total = np.inf
    junction = -1
    for node, cq in from_q.items():
        cs = from_s.get(node)
        if cs is None:
            continue
        total = cq + cs - cubes[node].side
        if total < best_total - tol or (abs(total - best_total) <= tol
                                        and node < junction):
            best_total = total
            junction = node
    if junction < 0 or best_total > limit + tol:
        return None
    head = _walk_back(parent_q, junction)
    tail = _walk_back(parent_s, junction)
    path = head + tail[-2::-1]
    j0 = _central_index(decomp, path, eps)
    if j0 is None:
        return None
    chain = Chain(indices=path, epsilon=eps, j0=j0, length=best_total)
    return chain if validate_chain(decomp, chain) else None


# ---------------------------------------------------------------------------
# the chain-sum estimate
# ---------------------------------------------------------------------------

def verify_whitney_sum(decomp, a, b, max_sources=4000):
    """sup over Q of side(Q)^(b-a) * sum over S of side(S)^a / D(Q,S)^b.

    Requires b > a > d - 1.  When the decomposition has more than
    ``max_sources`` cubes the sup is taken over a deterministic stratified
    subset of Q (the inner sum always runs over every S).
    """
    d = decomp.dim
    if not b > a > d - 1:
        raise ValueError(f"need b > a > d-1, got a={a}, b={b}, d={d}")
    n = decomp.n_cubes
    if n == 0:
        raise ValueError("empty decomposition")
    centers = decomp.centers
    sides = decomp.sides
    lows = np.asarray([c.lo for c in decomp.cubes])
    highs = np.asarray([c.hi for c in decomp.cubes])
    if n > max_sources:
        qs = np.unique(np.linspace(0, n - 1, max_sources).astype(int))
    else:
        qs = np.arange(n)
    powered = sides ** a
    sup = 0.0
    arg = -1
    for q in qs:
        gaps = np.maximum(0.0, np.maximum(lows[q] - highs, lows - highs[q]))
        dist = np.sqrt(np.einsum("ij,ij->i", gaps, gaps))
        D = sides[q] + dist + sides
        val = sides[q] ** (b - a) * float(np.sum(powered / D ** b))
        if val > sup:
            sup = val
            arg = int(q)
    return sup, arg


# ---------------------------------------------------------------------------
# path condition audit (comparably-sized mutually visible cubes)
# ---------------------------------------------------------------------------

@dataclass
class PathConditionReport:
    ok: bool
    n_pairs: int
    found: int
    budget_exhausted: int
    max_path_len: int
    pair_rows: list = field(default_factory=list)
    # rows: (r, path_len or -1, dist_x_over_r, dist_y_over_r, max_gap_over_r)

    def summary_lines(self):
        lines = [f"path_audit_pass={self.ok}",
                 f"pairs={self.n_pairs}", f"found={self.found}",
                 f"budget_exhausted={self.budget_exhausted}",
                 f"max_path_len={self.max_path_len}"]
        return lines


def _cube_sample_points(cube, shrink=1e-3):
    """Corner and center samples of the open cube (corners pulled inward).

    Closed-cube corners can sit exactly on a wall of the domain, where the
    grazing segment is a measure-zero false negative for the open cube.
    """
    center = np.asarray(cube.center)
    corners = center + (1.0 - shrink) * (cube.corners() - center)
    return np.vstack([corners, center[None, :]])


def _cube_visible_from_point(domain, x, cubes, decomp):
    """Which cubes are wholly visible from x (corner + center certificate)."""
    if not cubes:
        return np.zeros(0, dtype=bool)
    pts = np.vstack([_cube_sample_points(decomp.cubes[c]) for c in cubes])
    X = np.broadcast_to(np.asarray(x), pts.shape)
    vis = domain.segment_inside_many(X, pts)
    return vis.reshape(len(cubes), -1).all(axis=1)


def _cubes_mutually_visible(domain, decomp, qa, qb):
    pa = _cube_sample_points(decomp.cubes[qa])
    pb = _cube_sample_points(decomp.cubes[qb])
    X = np.repeat(pa, pb.shape[0], axis=0)
    Y = np.tile(pb, (pa.shape[0], 1))
    return bool(domain.segment_inside_many(X, Y).all())


def audit_visible_paths(domain, n_pairs=40, n_max=8, budget=SEARCH_BUDGET,
                      seed=0, max_level=7, decomp=None):
    """Sampled audit of the bounded-path visibility condition.

    For random pairs x, y in D with y not visible from x, searches for at
    most n_max cubes of side within SIZE_WINDOW * |x-y|, the first wholly
    visible from x, the last from y, consecutive ones mutually visible.
    Convex domains yield no such pairs and pass vacuously.
    """
    if decomp is None:
        decomp = whitney_decompose(domain, max_level=max_level)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0B]))
    bb_lo, bb_hi = domain.bounding_box()
    bb_lo = np.asarray(bb_lo)
    bb_hi = np.asarray(bb_hi)

    pairs = []
    attempts = 0
    while len(pairs) < n_pairs and attempts < 400 * n_pairs:
        attempts += 1
        pts = rng.uniform(bb_lo, bb_hi, size=(2, 2))
        if not domain.contains_many(pts).all():
            continue
        if not domain.segment_inside_many(pts[:1], pts[1:2])[0]:
            pairs.append((pts[0], pts[1]))

    report = PathConditionReport(ok=True, n_pairs=len(pairs), found=0,
                                 budget_exhausted=0, max_path_len=0)
    centers = decomp.centers
    sides = decomp.sides
    for x, y in pairs:
        r = float(np.hypot(*(y - x)))
        mid = (x + y) / 2.0
        size_ok = (sides >= SIZE_WINDOW[0] * r) & (sides <= SIZE_WINDOW[1] * r)
        near = np.einsum("ij,ij->i", centers - mid, centers - mid) \
            <= (8.0 * n_max * r) ** 2
        cand = np.nonzero(size_ok & near)[0]
        if cand.size == 0:
            report.ok = False
            report.pair_rows.append((r, -1, np.nan, np.nan, np.nan))
            continue
        from_x = _cube_visible_from_point(domain, x, list(cand), decomp)
        from_y = _cube_visible_from_point(domain, y, list(cand), decomp)
        starts = cand[from_x]
        goals = set(int(c) for c in cand[from_y])
        path = _bfs_visible_path(domain, decomp, list(starts), goals,
                                 set(int(c) for c in cand), n_max, budget)
        if path is None:
            report.ok = False
            report.budget_exhausted += 1
            report.pair_rows.append((r, -1, np.nan, np.nan, np.nan))
            continue
        report.found += 1
        report.max_path_len = max(report.max_path_len, len(path))
        dist_x = _point_cube_distance(x, decomp.cubes[path[0]]) / r
        dist_y = _point_cube_distance(y, decomp.cubes[path[-1]]) / r
        gaps = [decomp.set_distance(a, b) / r
                for a, b in zip(path[:-1], path[1:])] or [0.0]
        report.pair_rows.append((r, len(path), dist_x, dist_y, max(gaps)))
    if report.found < report.n_pairs:
        report.ok = False
    return report


def _point_cube_distance(x, cube):
    gaps = np.maximum(0.0, np.maximum(np.asarray(cube.lo) - x,
                                      x - np.asarray(cube.hi)))
    return float(np.sqrt(np.sum(gaps ** 2)))


def _bfs_visible_path(domain, decomp, starts, goals, allowed, n_max, budget):
    """Shortest path in the candidate-cube visibility graph, edges on demand."""
    if not starts:
        return None
    frontier = sorted(dict.fromkeys(starts))
    allowed_order = sorted(allowed)
    parents = {s: -1 for s in frontier}
    for s in frontier:
        if s in goals:
            return [s]
    tested = 0
    depth = 1
    while frontier and depth < n_max and tested < budget:
        nxt = []
        for node in frontier:
            for other in allowed_order:
                if other in parents:
                    continue
                tested += 1
                if tested >= budget:
                    break
                if _cubes_mutually_visible(domain, decomp, node, other):
                    parents[other] = node
                    nxt.append(other)
                    if other in goals:
                        path = [other]
                        cur = node
                        while cur != -1:
                            path.append(cur)
                            cur = parents[cur]
                        path.reverse()
                        return path
            if tested >= budget:
                break
        frontier = nxt
        depth += 1
    return None
