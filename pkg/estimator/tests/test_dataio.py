"""Format reader tests against hand-constructed files."""
import json

import numpy as np
import pytest

from bodyest import dataio


def test_measurements_csv_round_trip(tmp_path):
    ids = ["000000", "000001"]
    values = np.random.default_rng(0).uniform(100, 900, size=(2, 16))
    path = tmp_path / "m.csv"
    dataio.write_predictions_csv(path, ids, values)
    back = dataio.read_measurements_csv(path)
    assert list(back) == ids
    assert np.abs(back["000001"] - values[1]).max() <= 0.0005 + 1e-9


def test_csv_header_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("id,foo,bar\nx,1,2\n")
    with pytest.raises(ValueError):
        dataio.read_measurements_csv(p)


def test_pgm_reader(tmp_path):
    px = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    p = tmp_path / "img.pgm"
    p.write_bytes(b"P5\n4 3\n255\n" + px.tobytes())
    img = dataio.read_pgm(p)
    assert img.shape == (3, 4)
    assert img[2, 3] == pytest.approx(220 / 255)


def test_pbm_reader(tmp_path):
    bits = np.array([[1, 0, 1, 0, 1, 0, 1, 0, 1]], dtype=np.uint8)  # 9 wide
    packed = np.packbits(bits, axis=1)
    p = tmp_path / "img.pbm"
    p.write_bytes(b"P4\n9 1\n" + packed.tobytes())
    img = dataio.read_pbm(p)
    assert img.shape == (1, 9)
    assert np.array_equal(img[0], bits[0])


def test_ply_reader_double_and_float(tmp_path):
    pts = np.array([[0.5, 1.5, -2.0], [3.25, 0.0, 9.0]])
    for typ, dt in (("double", "<f8"), ("float", "<f4")):
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex 2\nproperty {typ} x\nproperty {typ} y\nproperty {typ} z\n"
            "end_header\n"
        ).encode()
        p = tmp_path / f"c_{typ}.ply"
        p.write_bytes(header + pts.astype(dt).tobytes())
        back = dataio.read_ply_points(p)
        assert back.shape == (2, 3)
        assert np.allclose(back, pts, atol=1e-6)


def test_manifest_version_checked(tmp_path):
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps({"format_version": 99, "samples": []}))
    with pytest.raises(ValueError):
        dataio.read_manifest(p)


def test_image_standardization_uses_given_stats():
    imgs = np.random.default_rng(0).uniform(size=(4, 8, 8))
    stats = dataio.image_stats(imgs)
    normed = dataio.standardize_images(imgs, stats)
    assert normed.mean() == pytest.approx(0.0, abs=1e-9)
    assert normed.std() == pytest.approx(1.0, abs=1e-9)
    shifted = dataio.standardize_images(imgs + 5.0, stats)
    assert shifted.mean() > 1.0  # test images keep their offset under train stats


def test_corpus_bbox_preserves_relative_scale():
    small = np.random.default_rng(1).uniform(-0.5, 0.5, size=(50, 3))
    big = small * 2.0
    transform = dataio.corpus_bbox([small, big])
    ns, nb = dataio.normalize_clouds([small, big], transform)
    assert np.ptp(nb, axis=0).max() > 1.9 * np.ptp(ns, axis=0).max()
