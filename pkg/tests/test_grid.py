import numpy as np
import pytest

from spherical_maximal.grid import GeometryError, GridFunction, load_grid, save_grid


def test_values_are_read_only_copies():
    a = np.arange(4.0).reshape(2, 2)
    f = GridFunction(a, (0, 0))
    a[0, 0] = 99
    assert f.values[0, 0] == 0
    with pytest.raises(ValueError):
        f.values[0, 0] = 1


def test_torus_geometry_checks():
    with pytest.raises(GeometryError):
        GridFunction(np.zeros((2, 3)), (0, 0), periodic=True)
    with pytest.raises(GeometryError):
        GridFunction(np.zeros((2, 2)), (1, 0), periodic=True)
    with pytest.raises(GeometryError):
        GridFunction(np.zeros((2, 2)), (0,))


def test_constructors():
    assert GridFunction.delta(3).values.sum() == 1
    assert GridFunction.delta(2, at=(3, -1), torus=5).value_at((3, 4)) == 1
    assert GridFunction.constant(2, 4, 2.5).values.sum() == 40
    assert GridFunction.shell_indicator(3, 1).values.sum() == 6
    assert GridFunction.ball_indicator(2, 1).values.sum() == 5
    assert GridFunction.annulus_indicator(2, 1, 2).values.sum() == 8
    box = GridFunction.box_indicator((1, 2), 3)
    assert box.upper == (4, 5)
    with pytest.raises(ValueError):
        GridFunction.random(2, 3, 0, kind="bogus")


def test_value_at_outside_box_is_zero():
    f = GridFunction.box_indicator((0, 0), 2)
    assert f.value_at((1, 1)) == 1
    assert f.value_at((2, 0)) == 0


def test_torus_norm_is_centred():
    f = GridFunction.constant(1, 8)
    assert list(f.norm2_grid()) == [0, 1, 4, 9, 16, 9, 4, 1]


def test_restrict_to_box_wraps_on_torus():
    f = GridFunction.delta(1, at=(0,), torus=4)
    g = f.restrict_to_box((-4,), (8,))
    assert list(g.nonzero_points()[0].ravel()) == [-4, 0]
    h = GridFunction.box_indicator((0,), 2).restrict_to_box((1,), (4,))
    assert list(h.values) == [1, 0, 0, 0]


@pytest.mark.parametrize("kind", ["signs", "complex"])
def test_save_load_round_trip(tmp_path, kind):
    f = GridFunction.random(3, 4, 7, kind=kind, corner=(-2, 0, 1))
    path = tmp_path / "f.txt"
    save_grid(path, f)
    g = load_grid(path)
    assert g.same_geometry(f)
    assert np.array_equal(g.values, f.values)


def test_save_load_torus(tmp_path):
    f = GridFunction.random(2, 5, 1, kind="uniform", torus=True)
    save_grid(tmp_path / "t.txt", f)
    g = load_grid(tmp_path / "t.txt")
    assert g.periodic and np.array_equal(g.values, f.values)


def test_load_rejects_short_file(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text('{"d": 1, "kind": "box", "origin": [0], "shape": [3], "complex": false}\n1.0\n')
    with pytest.raises(GeometryError):
        load_grid(p)
