import json

import numpy as np
import pytest

from anisoshape.curve2d import (
    MultiCurve,
    build,
    circle,
    component_labels,
    components,
    convex_hull,
    enclosed_area,
    frame,
    hull_indices,
    load_curve,
    polar_loop,
    remesh,
    save_curve,
    shoelace,
)
from anisoshape.errors import DegenerateLoop, InputError, OverlappingComponents, SelfIntersection


def test_square_area_and_orientation():
    c = build([[(0, 0), (1, 0), (1, 1), (0, 1)]])
    assert enclosed_area(c) == pytest.approx(1.0)
    assert c.ccw == (True,)


def test_clockwise_triangle_is_reversed():
    tri = [(0, 0), (0, 1), (1, 0)]
    c = build([tri])
    assert shoelace(c.loops[0]) > 0
    assert {tuple(p) for p in c.loops[0]} == {tuple(map(float, p)) for p in tri}


def test_bowtie_rejected():
    with pytest.raises(SelfIntersection):
        build([[(0, 0), (1, 1), (1, 0), (0, 1)]])


def test_overlapping_loops_rejected():
    with pytest.raises(OverlappingComponents):
        build([circle(1.0, 64), circle(1.0, 64, (0.5, 0))])


def test_closing_vertex_dropped():
    c = build([[(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]])
    assert c.n_vertices == 4


def test_regular_polygon_area():
    c = build([circle(1.0, 256)])
    assert enclosed_area(c) == pytest.approx(128 * np.sin(2 * np.pi / 256), abs=1e-12)


def test_annulus_area_and_hole_orientation():
    c = build([circle(2.0, 512), circle(1.0, 256)])
    assert enclosed_area(c) == pytest.approx(3 * np.pi, rel=1e-3)
    assert c.ccw == (True, False)
    assert len(components(c)) == 1
    assert list(component_labels(c)) == [0, 0]


def test_two_disks_two_components():
    c = build([circle(1.0, 64, (-2, 0)), circle(1.0, 64, (2, 0))])
    assert len(components(c)) == 2


def test_frame_invariants():
    c = build([polar_loop(lambda t: 1 + 0.3 * np.cos(3 * t), 120)])
    fr = frame(c)
    assert np.allclose(np.linalg.norm(fr.tangent, axis=1), 1, atol=1e-12)
    assert np.allclose(np.linalg.norm(fr.vertex_normal, axis=1), 1, atol=1e-12)
    assert np.allclose(np.sum(fr.tangent * fr.normal, axis=1), 0, atol=1e-12)
    assert np.sum(fr.turning) == pytest.approx(2 * np.pi, abs=1e-9)
    assert np.allclose(fr.curvature, fr.turning / fr.dual_length)


def test_hull_of_convex_polygon_is_itself():
    c = build([circle(1.0, 64)])
    hull = convex_hull(c)
    assert len(hull.indices) == 64
    assert np.all(hull.distance == 0)


def test_star_hull_touches_only_near_lobes():
    c = build([polar_loop(lambda t: 1 + 0.3 * np.cos(3 * t), 120)])
    hull = convex_hull(c)
    r = np.linalg.norm(c.points, axis=1)
    on_hull = hull.distance < 1e-12
    assert np.all(on_hull[[0, 40, 80]])  # the three maxima of r
    assert np.all(~on_hull[[20, 60, 100]])  # the three minima
    assert np.all(r[on_hull] > 1.0)


def test_two_circles_stadium_hull():
    c = build([circle(1.0, 128, (-2, 0)), circle(1.0, 128, (2, 0))])
    hull = convex_hull(c)
    assert hull.area == pytest.approx(np.pi + 8, rel=1e-3)
    inner = c.points[:, 0] * np.sign(c.points[:, 0]) < 2 - 0.5
    assert np.all(hull.distance[inner] > 0)


def test_hull_collinear_points_dropped():
    pts = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert sorted(hull_indices(pts).tolist()) == [0, 2, 3, 4]


def test_remesh_uniform_and_area():
    c = build([circle(1.0, 64)])
    r = remesh(c, 2 * np.pi / 256)
    assert abs(r.n_vertices - 256) <= 1
    assert abs(enclosed_area(r) - enclosed_area(c)) < 1e-3
    e = r.edge_lengths
    assert e.max() / e.min() < 1.01


def test_remesh_idempotent_on_uniform():
    c = build([circle(1.0, 200)])
    assert abs(remesh(c, c.h).n_vertices - 200) <= 1


def test_remesh_degenerate():
    c = build([circle(0.01, 16)])
    with pytest.raises(DegenerateLoop):
        remesh(c, 0.1)


def test_json_and_csv_roundtrip(tmp_path):
    c = build([circle(2.0, 32), circle(1.0, 16)])
    for name in ("c.json", "c.csv"):
        save_curve(c, tmp_path / name)
        back = load_curve(tmp_path / name)
        assert np.array_equal(back.points, c.points)


def test_load_errors(tmp_path):
    with pytest.raises(InputError):
        load_curve(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"points": []}))
    with pytest.raises(InputError):
        load_curve(p)


def test_multicurve_with_points_keeps_structure():
    c = MultiCurve((circle(1.0, 8), circle(0.5, 6, (3, 0))))
    d = c.with_points(c.points * 2)
    assert [len(lp) for lp in d.loops] == [8, 6]
    assert np.allclose(d.loop_areas, 4 * c.loop_areas)
