import numpy as np
import pytest
import scipy.linalg

from visform import forms, geometry as geo, kernels as kn, mesh, spectral
from conftest import two_cell_grid


@pytest.fixture(scope="module")
def two_cell_form():
    grid = two_cell_grid()
    pairs = mesh.visibility_pairs(grid)
    form = forms.assemble(grid, pairs, kn.KernelSpec("constant"), "cen", p=2)
    return grid, form


# ---------------------------------------------------------------------------
# the p = 2 constant
# ---------------------------------------------------------------------------

def test_two_cell_eigenvalue(two_cell_form):
    # E(u) = 2 (u1-u2)^2, ||u - mean||^2 = 2 at u = (1,-1): lambda = 4
    grid, form = two_cell_form
    assert spectral.poincare_constant_l2(form, grid) == pytest.approx(0.25)


def test_power_iteration_against_eigh(annulus_grid):
    pairs = mesh.visibility_pairs(annulus_grid)
    form = forms.assemble(annulus_grid, pairs,
                          kn.KernelSpec("power", s=0.5, p=2), "vis")
    cp = spectral.poincare_constant_l2(form, annulus_grid)
    A, connected = spectral.quadratic_matrix(form)
    assert connected
    w = scipy.linalg.eigh(A, np.diag(annulus_grid.measures),
                          eigvals_only=True)
    assert w[0] == pytest.approx(0.0, abs=1e-8)
    assert cp == pytest.approx(1.0 / w[1], rel=1e-6)


def test_neumann_square_benchmark():
    grid = mesh.build_grid(geo.make_box(1, 1), (0.5, 0.5), 1.0, 1.0 / 32.0)
    form = forms.assemble(grid, None, None, "local", p=2)
    cp = spectral.poincare_constant_l2(form, grid)
    assert cp == pytest.approx(1.0 / np.pi ** 2, rel=0.05)


def test_disconnected_graph_reports_inf():
    # two cells too far apart for a truncated kernel: no pairs survive
    grid = two_cell_grid(distance=2.0)
    pairs = mesh.visibility_pairs(grid)
    form = forms.assemble(grid, pairs, kn.KernelSpec("truncated", rho=1.0),
                          "cen", p=2)
    assert spectral.poincare_constant_l2(form, grid) == np.inf


def test_scale_sanity(annulus_grid):
    # scaling all weights by c scales the constant by 1/c exactly
    pairs = mesh.visibility_pairs(annulus_grid)
    base = forms.assemble(annulus_grid, pairs,
                          kn.KernelSpec("power", s=0.5, p=2), "vis")
    scaled = forms.FormOperator(mode=base.mode, grid=base.grid,
                                kernel=base.kernel, p=base.p,
                                pair_i=base.pair_i, pair_j=base.pair_j,
                                weight=4.0 * base.weight)
    c1 = spectral.poincare_constant_l2(base, annulus_grid)
    c2 = spectral.poincare_constant_l2(scaled, annulus_grid)
    assert c2 == pytest.approx(c1 / 4.0, rel=1e-6)


def test_mode_monotonicity(annulus_grid):
    # E_vis <= E_cen pointwise forces C_P(vis) >= C_P(cen)
    pairs = mesh.visibility_pairs(annulus_grid)
    kernel = kn.KernelSpec("power", s=0.5, p=2)
    cp_vis = spectral.poincare_constant_l2(
        forms.assemble(annulus_grid, pairs, kernel, "vis"), annulus_grid)
    cp_cen = spectral.poincare_constant_l2(
        forms.assemble(annulus_grid, pairs, kernel, "cen"), annulus_grid)
    assert cp_vis >= cp_cen


def test_ball_mode_rejected(annulus_grid):
    pairs = mesh.visibility_pairs(annulus_grid)
    form = forms.assemble(annulus_grid, pairs,
                          kn.KernelSpec("power", s=0.5, p=2), "ball")
    with pytest.raises(ValueError):
        spectral.poincare_constant_l2(form, annulus_grid)


# ---------------------------------------------------------------------------
# witness profile and Rayleigh quotients
# ---------------------------------------------------------------------------

def test_witness_profile_values(straight_dumbbell):
    grid = mesh.build_grid(straight_dumbbell, (0.0, 0.0), 8.0, 0.5)
    u = spectral.witness_step_function(grid)
    assert np.all(np.abs(u) <= 1.0)
    assert np.all(u[grid.tags == geo.TAG_MINUS] == -1.0)
    assert np.all(u[grid.tags == geo.TAG_PLUS] == 1.0)
    star = grid.tags == geo.TAG_STAR
    assert np.array_equal(u[star], grid.centers[star, 0])
    # odd symmetry makes the mean nearly zero
    assert abs(mesh.cell_mean(grid, u)) < 1e-9


def test_witness_mass_grows_like_area(straight_dumbbell):
    vals = {}
    for R in (8.0, 16.0):
        grid = mesh.build_grid(straight_dumbbell, (0.0, 0.0), R, 0.5)
        u = spectral.witness_step_function(grid)
        ubar = mesh.cell_mean(grid, u)
        vals[R] = float(np.dot(grid.measures, np.abs(u - ubar) ** 2))
    assert 3.5 <= vals[16.0] / vals[8.0] <= 4.5


def test_witness_needs_tags(annulus_grid):
    with pytest.raises(ValueError):
        spectral.witness_step_function(annulus_grid)


def test_rayleigh_two_cell(two_cell_form):
    grid, form = two_cell_form
    # (0.25 + 0.25) / 2
    assert spectral.rayleigh_ratio(form, grid, [0.0, 1.0]) == pytest.approx(0.25)


def test_rayleigh_bounded_by_constant(annulus_grid):
    pairs = mesh.visibility_pairs(annulus_grid)
    form = forms.assemble(annulus_grid, pairs,
                          kn.KernelSpec("power", s=0.5, p=2), "vis")
    cp = spectral.poincare_constant_l2(form, annulus_grid)
    rng = np.random.default_rng(4)
    for _ in range(50):
        u = rng.standard_normal(annulus_grid.n_cells)
        assert spectral.rayleigh_ratio(form, annulus_grid, u) <= cp * (1 + 1e-8)


def test_rayleigh_rejects_constant(two_cell_form):
    grid, form = two_cell_form
    with pytest.raises(ValueError, match="constant"):
        spectral.rayleigh_ratio(form, grid, [3.0, 3.0])


# ---------------------------------------------------------------------------
# power-law fitting and the experiment driver
# ---------------------------------------------------------------------------

def test_fit_power_law_exact():
    assert spectral.fit_power_law([(2, 4), (4, 16), (8, 64)])[0] \
        == pytest.approx(2.0)
    assert spectral.fit_power_law([(2, 8), (4, 64), (8, 512)])[0] \
        == pytest.approx(3.0)
    fit, se = spectral.fit_power_law(
        [(8, 8 ** 1.5), (16, 16 ** 1.5), (32, 32 ** 1.5)])
    assert fit == pytest.approx(1.5) and se == pytest.approx(0.0, abs=1e-12)


def test_fit_power_law_preconditions():
    with pytest.raises(ValueError):
        spectral.fit_power_law([(2, 4), (4, 16)])
    with pytest.raises(ValueError):
        spectral.fit_power_law([(2, 4), (4, -16), (8, 64)])


def test_predicted_exponent_table(straight_dumbbell, curved_dumbbell):
    k_small = kn.KernelSpec("power", s=0.25, p=2)
    k_big = kn.KernelSpec("power", s=0.75, p=2)
    assert spectral.predicted_exponent(straight_dumbbell, k_small, 2) \
        == (1.5, False)
    assert spectral.predicted_exponent(curved_dumbbell, k_small, 2) \
        == (2.0, False)
    assert spectral.predicted_exponent(straight_dumbbell, k_big, 2) \
        == (2.0, False)
    assert spectral.predicted_exponent(straight_dumbbell, None, 1) \
        == (2.0, False)
    assert spectral.predicted_exponent(straight_dumbbell, None, 2) \
        == (2.0, True)
    with pytest.raises(ValueError):
        spectral.predicted_exponent(straight_dumbbell, k_big, 2.9)
    with pytest.raises(ValueError):
        spectral.predicted_exponent(straight_dumbbell, None, 3)


def test_scaling_experiment_guards(straight_dumbbell):
    kernel = kn.KernelSpec("power", s=0.25, p=2)
    with pytest.raises(ValueError):
        spectral.scaling_experiment(straight_dumbbell, kernel, 2.0, [8, 16])
    with pytest.raises(ValueError):
        spectral.scaling_experiment(straight_dumbbell, kernel, 2.0,
                                    [16, 8, 4], method="witness")
    with pytest.raises(ValueError):
        spectral.scaling_experiment(straight_dumbbell, kernel, 2.0,
                                    [4, 8, 16], h=0.75)
    with pytest.raises(ValueError):
        spectral.scaling_experiment(straight_dumbbell, kernel, 2.0,
                                    [4, 8, 16], method="quantum")


def test_scaling_experiment_small_local(straight_dumbbell):
    rep = spectral.scaling_experiment(straight_dumbbell, None, 1.0,
                                      [4, 8, 16], method="witness", h=0.5)
    assert rep.predicted == 2.0
    assert len(rep.samples) == 3
    assert rep.tolerance == 0.3
    assert 1.5 < rep.fitted < 2.5


def test_cut_corridor_reports_infinite_constant(straight_dumbbell):
    # severing every left-right pair leaves two components: lambda_1 = 0
    grid = mesh.build_grid(straight_dumbbell, (0.0, 0.0), 4.0, 0.5)
    pairs = mesh.visibility_pairs(grid)
    left = grid.centers[:, 0] < 0.0
    crossing = left[pairs.i] != left[pairs.j]
    cut = mesh.PairSet(i=pairs.i, j=pairs.j,
                       visible=pairs.visible & ~crossing, r=pairs.r)
    form = forms.assemble(grid, cut, kn.KernelSpec("power", s=0.25, p=2),
                          "vis")
    assert spectral.poincare_constant_l2(form, grid) == np.inf
