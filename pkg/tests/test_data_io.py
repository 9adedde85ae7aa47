import json
import struct

import numpy as np
import pytest

from pad_rbm.data_io import (
    generate_bars_and_stripes,
    load_idx_images,
    load_model,
    load_text_dataset,
    save_idx_images,
    save_model,
    save_text_dataset,
)
from pad_rbm.errors import FormatError, InvalidArgumentError, LengthError, ParseError, VersionError
from pad_rbm.model import Dataset, ModelParams
from pad_rbm.perturbation import NoiseSource


def is_bar_or_stripe(x, d):
    img = x.reshape(d, d)
    rows_const = all(len(set(r)) == 1 for r in img)
    cols_const = all(len(set(c)) == 1 for c in img.T)
    return rows_const or cols_const


class TestBarsAndStripes:
    @pytest.mark.parametrize("d,count", [(2, 6), (3, 14), (4, 30)])
    def test_exhaustive_count(self, d, count):
        ds = generate_bars_and_stripes(d)
        assert len(ds) == count
        assert len({x.tobytes() for x in ds.examples}) == count

    def test_all_valid(self):
        ds = generate_bars_and_stripes(4)
        assert all(is_bar_or_stripe(x, 4) for x in ds.examples)

    def test_row_major_layout(self):
        ds = generate_bars_and_stripes(2)
        # rows = (1, 0) is the third row pattern in binary order
        np.testing.assert_array_equal(ds.examples[2], [1, 1, 0, 0])

    def test_sampled(self):
        ds = generate_bars_and_stripes(3, NoiseSource(0), count=50)
        assert len(ds) == 50 and all(is_bar_or_stripe(x, 3) for x in ds.examples)

    def test_too_small(self):
        with pytest.raises(InvalidArgumentError):
            generate_bars_and_stripes(1)


class TestTextDataset:
    def test_load(self, tmp_path):
        f = tmp_path / "d.txt"
        f.write_text("01\n10\n")
        ds = load_text_dataset(f)
        assert ds.n == 2 and len(ds) == 2
        np.testing.assert_array_equal(ds.examples, [[0, 1], [1, 0]])

    def test_empty(self, tmp_path):
        f = tmp_path / "d.txt"
        f.write_text("")
        with pytest.raises(ParseError):
            load_text_dataset(f)

    def test_bad_char(self, tmp_path):
        f = tmp_path / "d.txt"
        f.write_text("012\n")
        with pytest.raises(ParseError, match="line 1"):
            load_text_dataset(f)

    def test_ragged(self, tmp_path):
        f = tmp_path / "d.txt"
        f.write_text("01\n010\n")
        with pytest.raises(ParseError, match="line 2"):
            load_text_dataset(f)

    def test_roundtrip(self, tmp_path, rng):
        ds = Dataset(rng.integers(0, 2, (17, 9)))
        save_text_dataset(ds, tmp_path / "d.txt")
        assert load_text_dataset(tmp_path / "d.txt") == ds


def write_idx(path, magic, count, rows, cols, payload):
    path.write_bytes(struct.pack(">IIII", magic, count, rows, cols) + bytes(payload))


class TestIdx:
    def test_threshold(self, tmp_path):
        f = tmp_path / "x.idx"
        write_idx(f, 0x803, 1, 2, 2, [0, 255, 128, 127])
        np.testing.assert_array_equal(load_idx_images(f, 128).examples, [[0, 1, 1, 0]])

    def test_zero_threshold(self, tmp_path):
        f = tmp_path / "x.idx"
        write_idx(f, 0x803, 1, 2, 2, [0, 255, 128, 127])
        np.testing.assert_array_equal(load_idx_images(f, 0).examples, 1)

    def test_bad_magic(self, tmp_path):
        f = tmp_path / "x.idx"
        write_idx(f, 0x801, 1, 2, 2, [0, 0, 0, 0])
        with pytest.raises(FormatError):
            load_idx_images(f)

    def test_truncated(self, tmp_path):
        f = tmp_path / "x.idx"
        write_idx(f, 0x803, 2, 2, 2, [0, 0, 0, 0])
        with pytest.raises(LengthError):
            load_idx_images(f)

    def test_writer_roundtrip(self, tmp_path, rng):
        imgs = rng.integers(0, 256, (3, 4, 5)).astype(np.uint8)
        save_idx_images(imgs, tmp_path / "x.idx")
        ds = load_idx_images(tmp_path / "x.idx", 100)
        np.testing.assert_array_equal(ds.examples, (imgs.reshape(3, 20) >= 100))


class TestModelFile:
    def test_roundtrip(self, tmp_path, random_model):
        p = random_model(3, 2)
        save_model(p, tmp_path / "m.json")
        assert load_model(tmp_path / "m.json") == p

    def test_roundtrip_extreme_values(self, tmp_path):
        p = ModelParams([[1e-300, -np.nextafter(1.0, 2.0)]], [np.pi], [1 / 3, -0.0])
        save_model(p, tmp_path / "m.json")
        q = load_model(tmp_path / "m.json")
        assert q == p

    def test_version(self, tmp_path, random_model):
        save_model(random_model(2, 2), tmp_path / "m.json")
        doc = json.loads((tmp_path / "m.json").read_text())
        doc["format_version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(VersionError):
            load_model(tmp_path / "m.json")

    def test_bad_w_length(self, tmp_path, random_model):
        save_model(random_model(2, 2), tmp_path / "m.json")
        doc = json.loads((tmp_path / "m.json").read_text())
        doc["W"] = doc["W"][:-1]
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ParseError):
            load_model(tmp_path / "m.json")

    def test_not_json(self, tmp_path):
        (tmp_path / "m.json").write_text("W = 1")
        with pytest.raises(ParseError):
            load_model(tmp_path / "m.json")

    def test_nonfinite_rejected(self, tmp_path):
        doc = {"format_version": 1, "n": 1, "m": 1, "W": [float("nan")], "a": [0.0], "b": [0.0]}
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ParseError):
            load_model(tmp_path / "m.json")
