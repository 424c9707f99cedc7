import numpy as np

from great_circle_contact.sampling import disk_points, s2_grid, s3_points, tangent_frames


def test_s3_points_are_unit_and_seeded():
    pts = s3_points(500, seed=7)
    assert pts.shape == (500, 4)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-14)
    np.testing.assert_array_equal(pts, s3_points(500, seed=7))
    assert not np.array_equal(pts, s3_points(500, seed=8))


def test_s3_points_empty():
    assert s3_points(0).shape == (0, 4)


def test_s2_grid_size_and_spread():
    grid = s2_grid(16)
    assert grid.shape == (256, 3)
    np.testing.assert_allclose(np.linalg.norm(grid, axis=1), 1.0, atol=1e-14)
    # roughly balanced between hemispheres
    assert abs(int(np.sum(grid[:, 2] > 0)) - 128) <= 1


def test_disk_points_fill_disk():
    pts = disk_points(400, 0.2)
    r = np.linalg.norm(pts, axis=1)
    assert r.max() < 0.2
    assert r.min() > 0.0


def test_tangent_frames_orthonormal():
    grid = s2_grid(16)
    e1, e2 = tangent_frames(grid)
    for e in (e1, e2):
        np.testing.assert_allclose(np.sum(e * grid, axis=1), 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(e, axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.sum(e1 * e2, axis=1), 0.0, atol=1e-14)
