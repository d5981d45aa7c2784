import math

import numpy as np
import pytest

from logpot.geometry import (
    LatticeError,
    Polarizer,
    diameter,
    domain_from_json,
    domain_to_json,
    interior_cells,
    make_ball,
    make_mask,
    make_rect,
    polarize_domain,
    polarize_function,
    quadrature_grid,
    reflect,
    reflect_domain,
    same_cells,
    schwarz_ball,
    union_domains,
)


def random_mask_domain(rng, h=0.125):
    shape = tuple(rng.integers(4, 9, size=2))
    mask = rng.random(shape) < 0.6
    if not mask.any():
        mask[0, 0] = True
    # origin on the half-lattice so axis polarizers through 0 stay compatible
    origin = (rng.integers(-4, 4) * h, rng.integers(-4, 4) * h)
    return make_mask(origin, h, mask)


def test_ball_measure_2d():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 64)
    assert abs(d.measure - math.pi) / math.pi < 0.005


def test_ball_measure_3d():
    d = make_ball(3, (0.0, 0.0, 0.0), 1.0, 1.0 / 16)
    exact = 4.0 * math.pi / 3.0
    assert abs(d.measure - exact) / exact < 0.02


def test_ball_centers_strictly_inside():
    d = make_ball(2, (0.25, -0.5), 0.75, 1.0 / 16)
    r = np.linalg.norm(d.nodes - [0.25, -0.5], axis=1)
    assert (r < 0.75).all()


def test_ball_rejects_coarse_h():
    with pytest.raises(ValueError):
        make_ball(2, (0.0, 0.0), 1.0, 0.3)


def test_rect_measure_exact():
    d = make_rect((0.0, 0.0), (0.5, 0.25), 1.0 / 16)
    assert d.measure == pytest.approx(0.125, abs=1e-15)
    assert d.cell_count == 8 * 4


def test_rect_rejects_misaligned_sides():
    with pytest.raises(ValueError):
        make_rect((0.0, 0.0), (0.3, 0.25), 1.0 / 16)


def test_quadrature_weights_sum_to_measure():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 16)
    grid = quadrature_grid(d)
    assert grid.weights.sum() == pytest.approx(d.measure, rel=1e-14)


def test_reflect_examples():
    p = Polarizer((0.0, 1.0), 0.0)
    assert reflect(p, (3.0, -1.0)) == pytest.approx([3.0, 1.0])
    assert reflect(p, (3.0, 1.0)) == pytest.approx([3.0, -1.0])
    assert reflect(p, (7.0, 0.0)) == pytest.approx([7.0, 0.0])


def test_reflect_is_involution():
    rng = np.random.default_rng(11)
    for _ in range(50):
        nrm = np.zeros(3)
        nrm[rng.integers(3)] = rng.choice([-1.0, 1.0])
        p = Polarizer(nrm, float(rng.normal()))
        x = rng.normal(size=3)
        assert np.abs(reflect(p, reflect(p, x)) - x).max() < 1e-12


def test_pairs_in_h_are_closer_than_reflected():
    # |x - y| <= |x - sigma(y)| for x, y in H
    rng = np.random.default_rng(5)
    p = Polarizer((1.0, 0.0), 0.25)
    for _ in range(200):
        x = rng.normal(size=2)
        y = rng.normal(size=2)
        x[0] = 0.25 + abs(x[0])
        y[0] = 0.25 + abs(y[0])
        assert np.linalg.norm(x - y) <= np.linalg.norm(x - reflect(p, y)) + 1e-12


def test_polarize_preserves_measure_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = random_mask_domain(rng)
        axis = int(rng.integers(2))
        nrm = np.zeros(2)
        nrm[axis] = 1.0
        p = Polarizer(nrm, 0.0)
        pd = polarize_domain(d, p)
        assert pd.cell_count == d.cell_count
        assert pd.measure == pytest.approx(d.measure, rel=1e-14)


def test_polarize_idempotent():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = random_mask_domain(rng)
        p = Polarizer((0.0, 1.0), 0.0)
        once = polarize_domain(d, p)
        twice = polarize_domain(once, p)
        assert same_cells(once, twice)


def test_polarize_moves_distant_disk():
    d = make_ball(2, (0.0, -2.0), 1.0, 1.0 / 8)
    pd = polarize_domain(d, Polarizer((0.0, 1.0), 0.0))
    assert same_cells(pd, make_ball(2, (0.0, 2.0), 1.0, 1.0 / 8))


def test_polarize_fixes_symmetric_domain():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    pd = polarize_domain(d, Polarizer((1.0, 0.0), 0.0))
    assert same_cells(pd, d)


def test_polarize_rejects_incompatible_offset():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    with pytest.raises(ValueError):
        polarize_domain(d, Polarizer((0.0, 1.0), 0.013))


def test_polarize_rejects_oblique_normal():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    with pytest.raises(ValueError):
        polarize_domain(d, Polarizer((1.0, 1.0), 0.0))


def test_polarize_function_preserves_l2():
    rng = np.random.default_rng(3)
    p = Polarizer((0.0, 1.0), 0.0)
    for _ in range(100):
        d = random_mask_domain(rng)
        u = rng.standard_normal(d.cell_count)
        box, pu = polarize_function(d, u, p)
        assert box.cell_count == pu.size
        assert pu @ pu == pytest.approx(u @ u, rel=1e-12)


def test_polarize_function_pair_example():
    # pair straddling the plane: u(a) = -1 below, u(sigma a) = 2 above
    d = make_rect((0.0, -0.25), (0.25, 0.25), 0.25)  # two cells
    u = np.array([-1.0, 2.0]) if d.nodes[0, 1] < 0 else np.array([2.0, -1.0])
    box, pu = polarize_function(d, u, Polarizer((0.0, 1.0), 0.0))
    above = box.nodes[:, 1] > 0
    assert pu[above] == pytest.approx([2.0])
    assert pu[~above] == pytest.approx([-1.0])


def test_polarize_function_fixes_polarized_field():
    d = make_rect((-0.5, -0.5), (0.5, 0.5), 0.25)
    u = d.nodes[:, 1].copy()  # increasing toward H: already polarized
    box, pu = polarize_function(d, u, Polarizer((0.0, 1.0), 0.0))
    vals = {tuple(np.round(x, 12)): v for x, v in zip(box.nodes, pu)}
    for x, v in zip(d.nodes, u):
        assert vals[tuple(np.round(x, 12))] == v


def test_schwarz_ball_matches_cell_count():
    d = make_rect((0.0, 0.0), (0.5, 0.25), 1.0 / 16)
    sb = schwarz_ball(d)
    assert sb.h == d.h
    assert sb.cell_count == d.cell_count


def test_schwarz_ball_of_ball_is_same_count():
    d = make_ball(2, (0.5, 0.5), 0.75, 1.0 / 16)
    sb = schwarz_ball(d)
    assert sb.cell_count == d.cell_count
    assert np.abs(sb.nodes + sb.nodes[::-1]).max() < 1e-12  # centered at 0


def test_diameter_matches_brute_force():
    rng = np.random.default_rng(9)
    for _ in range(20):
        d = random_mask_domain(rng)
        pts = d.nodes
        diff = pts[:, None, :] - pts[None, :, :]
        brute = float(np.sqrt((diff**2).sum(-1)).max())
        assert diameter(d) == pytest.approx(brute, rel=1e-14)


def test_interior_cells_erosion():
    d = make_rect((0.0, 0.0), (0.5, 0.5), 1.0 / 8)  # 4x4 cells
    inner = interior_cells(d, d.h)  # margin of one cell
    assert inner.sum() == 4  # only the 2x2 core survives
    assert interior_cells(d, 2 * d.h).sum() == 0
    assert interior_cells(d, 10.0).sum() == 0  # margin beyond the box


def test_union_domains():
    a = make_rect((0.0, 0.0), (0.25, 0.25), 1.0 / 8)
    b = make_rect((0.125, 0.0), (0.375, 0.25), 1.0 / 8)
    u = union_domains([a, b])
    assert u.cell_count == a.cell_count + b.cell_count - 2  # one column shared
    c = make_rect((0.03, 0.0), (0.28, 0.25), 1.0 / 8)
    with pytest.raises(LatticeError):
        union_domains([a, c])


def test_domain_json_roundtrip():
    rng = np.random.default_rng(1)
    cases = [
        make_ball(2, (0.25, -0.5), 0.75, 1.0 / 16),
        make_rect((0.0, 0.0), (0.5, 0.25), 1.0 / 16),
        random_mask_domain(rng),
        union_domains(
            [make_rect((0.0, 0.0), (0.25, 0.25), 1.0 / 8), make_ball(2, (0.5, 0.0), 0.5, 1.0 / 8)]
        ),
    ]
    for d in cases:
        back = domain_from_json(domain_to_json(d))
        assert same_cells(back, d)


def test_domain_from_json_kinds():
    d = domain_from_json({"kind": "ball", "center": [0.0, 0.0], "radius": 1.0, "h": 0.125})
    assert same_cells(d, make_ball(2, (0.0, 0.0), 1.0, 0.125))
    u = domain_from_json(
        {
            "kind": "union",
            "h": 0.125,
            "parts": [
                {"kind": "rect", "lo": [0.0, 0.0], "hi": [0.25, 0.25]},
                {"kind": "rect", "lo": [0.25, 0.0], "hi": [0.5, 0.25]},
            ],
        }
    )
    assert u.cell_count == 8
    with pytest.raises(ValueError):
        domain_from_json({"kind": "blob", "h": 0.125})
    with pytest.raises(ValueError):
        domain_from_json({"kind": "ball", "center": [0, 0], "radius": 1.0})  # no h


def test_reflect_domain_congruent():
    d = make_ball(2, (0.0, -2.0), 1.0, 1.0 / 8)
    rd = reflect_domain(d, Polarizer((0.0, 1.0), 0.0))
    assert rd.cell_count == d.cell_count
    assert same_cells(rd, make_ball(2, (0.0, 2.0), 1.0, 1.0 / 8))


def test_polarizer_requires_unit_normal():
    with pytest.raises(ValueError):
        Polarizer((0.0, 2.0), 0.5)
