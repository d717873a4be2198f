import numpy as np
import pytest
from scipy.integrate import quad

from visform import geometry as geo
from conftest import sample_points_in


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

def test_contains_square_center(unit_square):
    assert unit_square.contains((0.5, 0.5))


def test_contains_annulus_hole(annulus):
    assert not annulus.contains((0.0, 0.0))
    assert annulus.contains((0.5, 0.0))


def test_contains_straight_dumbbell_corridor(straight_dumbbell):
    # |x2| < 1 along the corridor
    assert straight_dumbbell.contains((0.0, 0.5))
    assert not straight_dumbbell.contains((0.0, 1.5))
    assert straight_dumbbell.contains((-5.0, 0.0))


def test_contains_rejects_nonfinite(unit_square):
    with pytest.raises(ValueError):
        unit_square.contains((np.nan, 0.5))


# ---------------------------------------------------------------------------
# segment containment
# ---------------------------------------------------------------------------

def test_segment_annulus_chord_misses_hole(annulus):
    # distance from the origin to the chord is 0.6/sqrt(2) ~ 0.424 > 1/3
    assert annulus.segment_inside((0.6, 0.0), (0.0, 0.6))


def test_segment_annulus_diameter_blocked(annulus):
    assert not annulus.segment_inside((0.6, 0.0), (-0.6, 0.0))


def test_segment_convex_always(unit_square):
    pts = sample_points_in(unit_square, 20, seed=1)
    for a in pts[:10]:
        for b in pts[10:]:
            assert unit_square.segment_inside(a, b)


def test_segment_requires_endpoints_inside(annulus):
    with pytest.raises(ValueError):
        annulus.segment_inside((0.0, 0.0), (0.5, 0.0))


def test_segment_straight_dumbbell_axis(straight_dumbbell):
    assert straight_dumbbell.segment_inside((-2.0, 0.0), (2.0, 0.0))


def test_segment_curved_dumbbell_axis_blocked(curved_dumbbell):
    # any affine graph deviates from the parabola by >= 1 on [-1, 1]
    # (Chebyshev equioscillation), so no bell-to-bell segment survives
    assert not curved_dumbbell.segment_inside((-2.0, 0.0), (2.0, 0.0))


def test_segment_visibility_symmetry(annulus, curved_dumbbell):
    for dom, seed in ((annulus, 3), (curved_dumbbell, 4)):
        box = None if dom.clip is None and dom.dumbbell is None \
            else ((-6, -6), (6, 6))
        pts = sample_points_in(dom, 40, seed=seed, box=box)
        X, Y = pts[:20], pts[20:]
        fwd = dom.segment_inside_many(X, Y)
        bwd = dom.segment_inside_many(Y, X)
        assert np.array_equal(fwd, bwd)


def test_segment_monotone_in_primitives(annulus):
    # adding primitives can only reveal more of each segment
    bigger = geo.DomainSpec(annulus.primitives + (geo.Ball((0.0, 0.0), 0.5),))
    pts = sample_points_in(annulus, 40, seed=5)
    X, Y = pts[:20], pts[20:]
    small = annulus.segment_inside_many(X, Y)
    large = bigger.segment_inside_many(X, Y)
    assert np.all(large[small])


def test_curved_dumbbell_bell_separation(curved_dumbbell):
    rng = np.random.default_rng(11)
    left = np.stack([rng.uniform(-6, -1.001, 50), rng.uniform(-6, 6, 50)], axis=1)
    right = np.stack([rng.uniform(1.001, 6, 50), rng.uniform(-6, 6, 50)], axis=1)
    vis = curved_dumbbell.segment_inside_many(left, right)
    assert not vis.any()


def test_tube_segment_slots_two_components():
    # horizontal segment over the parabola dip leaves and re-enters the tube
    tube = geo.ParabolicTube()
    dom = geo.DomainSpec((tube,))
    x = np.array([[-1.1, 2 * 1.1 ** 2 - 2]])
    y = np.array([[1.1, 2 * 1.1 ** 2 - 2]])
    assert dom.contains_many(x)[0] and dom.contains_many(y)[0]
    assert not dom.segment_inside_many(x, y)[0]


# ---------------------------------------------------------------------------
# boundary distance
# ---------------------------------------------------------------------------

def test_boundary_distance_square_center(unit_square):
    assert unit_square.boundary_distance((0.5, 0.5)) == pytest.approx(0.5)


def test_boundary_distance_ball_radial():
    ball = geo.DomainSpec((geo.Ball((0.0, 0.0), 1.0),))
    assert ball.boundary_distance((0.25, 0.0)) == pytest.approx(0.75)


def test_boundary_distance_straight_dumbbell_origin(straight_dumbbell):
    assert straight_dumbbell.boundary_distance((0.0, 0.0)) == pytest.approx(1.0)


def test_boundary_distance_outside_errors(unit_square):
    with pytest.raises(ValueError):
        unit_square.boundary_distance((2.0, 2.0))


def test_tube_distance_off_axis_minimum():
    # at (0,-2) the nearest tube wall point is off-axis: sqrt(7)/4
    tube = geo.ParabolicTube()
    sd = tube.signed_distance(np.array([[0.0, -2.0]]))[0]
    assert sd == pytest.approx(np.sqrt(7.0) / 4.0, rel=1e-9)


@pytest.mark.parametrize("maker", ["unit_square", "annulus",
                                   "straight_dumbbell", "curved_dumbbell"])
def test_delta_ball_inside_domain(maker, request):
    dom = request.getfixturevalue(maker)
    box = None if dom.dumbbell is None else ((-6, -6), (6, 6))
    pts = sample_points_in(dom, 25, seed=7, box=box)
    theta = np.linspace(0.0, 2 * np.pi, 40, endpoint=False)
    for x in pts:
        d = dom.boundary_distance(x)
        probe = x + (1 - 1e-9) * d * np.stack(
            [np.cos(theta), np.sin(theta)], axis=1)
        assert dom.contains_many(probe).all()


# ---------------------------------------------------------------------------
# constructors, clipping, serialization
# ---------------------------------------------------------------------------

def test_make_dumbbell_metadata(straight_dumbbell, curved_dumbbell):
    assert straight_dumbbell.dumbbell.gamma_tilde_id is not None
    assert curved_dumbbell.dumbbell.gamma_tilde_id is None
    assert straight_dumbbell.dumbbell.x0 == (0.0, 0.0)
    assert np.all(np.isfinite(straight_dumbbell.dumbbell.gamma_star_lo))


def test_make_dumbbell_bad_variant():
    with pytest.raises(ValueError):
        geo.make_dumbbell("twisted")
    with pytest.raises(ValueError):
        geo.make_dumbbell("straight", tube_radius=0.0)


def test_clip_ball_membership():
    half = geo.DomainSpec((geo.HalfSpace((-1.0, 0.0), -1.0),))  # x1 > 1
    clipped = geo.clip_ball(half, (0.0, 0.0), 4.0)
    assert clipped.contains((2.0, 0.0))
    assert not clipped.contains((5.0, 0.0))


def test_clip_measure_against_quadrature(straight_dumbbell):
    # |D cap B(0,R)| = piR^2 - 2 * area{|x1|<=1, 1<=x2<=sqrt(R^2-x1^2)}
    R = 4.0
    missing = 2.0 * quad(lambda x: np.sqrt(R * R - x * x) - 1.0, -1.0, 1.0)[0]
    expected = np.pi * R * R - missing
    clipped = geo.clip_ball(straight_dumbbell, (0.0, 0.0), R)
    rng = np.random.default_rng(123)
    pts = rng.uniform(-R, R, size=(200_000, 2))
    est = clipped.contains_many(pts).mean() * (2 * R) ** 2
    assert est == pytest.approx(expected, rel=0.02)


def test_domain_text_round_trip(straight_dumbbell, curved_dumbbell, annulus):
    for dom in (straight_dumbbell, curved_dumbbell, annulus,
                geo.clip_ball(curved_dumbbell, (0.0, 0.0), 8.0)):
        text = geo.domain_to_text(dom)
        back = geo.domain_from_text(text)
        assert geo.domain_to_text(back) == text
        pts = np.array([[0.3, 0.2], [-2.0, 0.4], [9.0, 9.0], [0.0, -2.0]])
        assert np.array_equal(dom.contains_many(pts), back.contains_many(pts))


def test_parse_domain_names():
    assert geo.parse_domain("straight-dumbbell").name == "straight-dumbbell"
    assert geo.parse_domain("annulus:0.25,2").primitives[0].r_out == 2.0
    box = geo.parse_domain("box:2,3")
    assert box.contains((1.9, 2.9)) and not box.contains((2.1, 1.0))
    with pytest.raises(ValueError):
        geo.parse_domain("pentagon")
    with pytest.raises(ValueError):
        geo.parse_domain("annulus:1")


# ---------------------------------------------------------------------------
# dumbbell structure audit
# ---------------------------------------------------------------------------

def test_condition_A_straight_passes(straight_dumbbell):
    rep = geo.audit_dumbbell_structure(straight_dumbbell, R_list=(8, 16, 32),
                                n_samples=20_000, seed=2)
    assert rep.ok
    assert rep.gamma_tilde_present
    # the convex sub-corridor overlap per bell grows linearly: ratio ~ 2
    for R, (m, p) in rep.tilde_ratios.items():
        assert 1.0 < m < 3.0 and 1.0 < p < 3.0


def test_condition_A_curved_passes_without_tilde(curved_dumbbell):
    rep = geo.audit_dumbbell_structure(curved_dumbbell, R_list=(8, 16, 32),
                                n_samples=20_000, seed=2)
    assert rep.ok
    assert not rep.gamma_tilde_present
    assert rep.tilde_ratios == {}


def test_condition_A_needs_metadata(annulus):
    with pytest.raises(ValueError):
        geo.audit_dumbbell_structure(annulus)


def test_condition_A_detects_missing_overlap():
    # two half-planes plus a corridor that touches neither bell
    minus = geo.HalfSpace((1.0, 0.0), -1.0)
    plus = geo.HalfSpace((-1.0, 0.0), -1.0)
    corridor = geo.Box((-0.5, -1.0), (0.5, 1.0))
    meta = geo.DumbbellMeta(minus_ids=(0,), corridor_ids=(1,), plus_ids=(2,),
                            gamma_star_lo=(-1.0, -1.0),
                            gamma_star_hi=(1.0, 1.0))
    dom = geo.DomainSpec((minus, corridor, plus), dumbbell=meta)
    rep = geo.audit_dumbbell_structure(dom, R_list=(8, 16), n_samples=5_000, seed=0)
    assert not rep.ok
    assert any("overlap_empty" in v for v in rep.violated)


def test_segment_degenerate_same_point(annulus):
    assert annulus.segment_inside((0.6, 0.0), (0.6, 0.0))


def test_domain_from_text_rejects_garbage():
    with pytest.raises(ValueError):
        geo.domain_from_text("primitive dodecahedron 1 2 3\n")
    with pytest.raises(ValueError):
        geo.domain_from_text("gibberish line\n")
