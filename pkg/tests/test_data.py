import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksmtgp.data import (
    DatasetError,
    SynthSpec,
    generate_frequency_task,
    generate_orientation_task,
    generate_synth_pair,
    load_dataset,
    parse_pgm,
    save_dataset,
    write_pgm,
)
from ksmtgp.multitask.evaluation import raw_pixel_accuracy

# B0 on the default orientation and frequency tasks, seed 0; reproduced by
# sklearn's LinearSVC (hinge loss, C=1) on the same min-max scaled pixels.
B0_ORIENTATION = 42.75
B0_FREQUENCY = 48.0


def pgm(w, h, payload, maxval=255, magic=b"P5"):
    return magic + f"\n{w} {h}\n{maxval}\n".encode() + bytes(payload)


# --- PGM -------------------------------------------------------------------


def test_pgm_two_by_two():
    img = parse_pgm(pgm(2, 2, [0, 255, 128, 64]))
    np.testing.assert_array_equal(img, [[0, 1.0], [128 / 255, 64 / 255]])


def test_pgm_header_comments_and_whitespace():
    data = b"P5 # magic\n# a comment line\n  2\t2\n#x\n 100\n" + bytes([0, 50, 100, 25])
    np.testing.assert_allclose(parse_pgm(data), [[0, 0.5], [1.0, 0.25]])


@pytest.mark.parametrize(
    "data, fragment",
    [
        (pgm(2, 2, [0, 1, 2, 3], magic=b"P2"), "P5"),
        (pgm(2, 2, [0, 1, 2]), "truncated"),
        (pgm(2, 2, [0, 1, 2, 3], maxval=256), "maxval"),
        (b"P5\n2 2", "truncated"),
        (b"P5\n2 x\n255\n" + bytes(4), "height"),
        (pgm(2, 2, [0, 1, 2, 200], maxval=100), "exceeds"),
        (pgm(0, 2, []), "empty"),
    ],
)
def test_pgm_rejects(data, fragment):
    with pytest.raises(DatasetError, match=fragment):
        parse_pgm(data)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_pgm_round_trip(w, h, data):
    px = data.draw(st.lists(st.integers(0, 255), min_size=w * h, max_size=w * h))
    img = np.array(px, dtype=float).reshape(h, w) / 255
    np.testing.assert_allclose(parse_pgm(write_pgm(img)), img, atol=1e-12)


# --- manifest --------------------------------------------------------------


def make_root(tmp_path, rows, files=None, header="path,label,split"):
    img = write_pgm(np.linspace(0, 1, 64).reshape(8, 8))
    for rel in files if files is not None else [r[0] for r in rows]:
        p = tmp_path / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(img)
    lines = [header] + [",".join(r) for r in rows]
    (tmp_path / "manifest.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tmp_path


FOUR = [
    ("a/1.pgm", "cat", "train"),
    ("a/2.pgm", "dog", "train"),
    ("b/3.pgm", "dog", "test"),
    ("b/4.pgm", "cat", "test"),
]


def test_manifest_four_rows(tmp_path):
    ds = load_dataset(make_root(tmp_path, FOUR))
    assert ds.n_classes == 2
    assert ds.class_names == ("cat", "dog")
    assert ds.labels.tolist() == [0, 1, 1, 0]
    assert ds.splits == ("train", "train", "test", "test")
    task = ds.to_task()
    assert len(task.train_images) == 2 and len(task.test_images) == 2
    assert task.test_labels.tolist() == [1, 0]


def test_manifest_first_appearance_order(tmp_path):
    rows = [(r, {"cat": "zebra", "dog": "ant"}[l], s) for r, l, s in FOUR]
    ds = load_dataset(make_root(tmp_path, rows))
    assert ds.class_names == ("zebra", "ant")
    assert ds.labels.tolist() == [0, 1, 1, 0]


def test_manifest_repeated_loads_identical(tmp_path):
    root = make_root(tmp_path, FOUR)
    a, b = load_dataset(root), load_dataset(root)
    assert a.labels.tolist() == b.labels.tolist() and a.splits == b.splits
    assert all(np.array_equal(x, y) for x, y in zip(a.images, b.images))


def test_manifest_validation_split_rejected(tmp_path):
    rows = FOUR[:3] + [("b/4.pgm", "cat", "validation")]
    with pytest.raises(DatasetError, match="row 5.*validation"):
        load_dataset(make_root(tmp_path, rows))


def test_manifest_missing_file(tmp_path):
    root = make_root(tmp_path, FOUR, files=[r[0] for r in FOUR[:3]])
    with pytest.raises(DatasetError, match="row 5.*not found"):
        load_dataset(root)


def test_manifest_class_absent_from_split(tmp_path):
    rows = FOUR[:3] + [("b/4.pgm", "dog", "test")]
    with pytest.raises(DatasetError, match="'cat' has no test"):
        load_dataset(make_root(tmp_path, rows))


def test_manifest_bad_header(tmp_path):
    with pytest.raises(DatasetError, match="header"):
        load_dataset(make_root(tmp_path, FOUR, header="file,label,split"))


def test_manifest_absent(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(tmp_path)


def test_custom_decoder(tmp_path):
    for rel, _, _ in FOUR:
        (tmp_path / rel).parent.mkdir(parents=True, exist_ok=True)
        (tmp_path / rel).write_text("x")
    (tmp_path / "manifest.csv").write_text("path,label,split\n" + "\n".join(",".join(r) for r in FOUR))
    ds = load_dataset(tmp_path, decoder=lambda p: np.full((9, 9), 0.5))
    assert ds.images[0].shape == (9, 9)


# --- synthetic benchmark ---------------------------------------------------


def test_synth_default_counts():
    a, b = generate_synth_pair()
    assert (a.name, b.name) == ("orientation", "frequency")
    assert (len(a.train_images), len(a.test_images), a.n_classes) == (40, 400, 4)
    assert (len(b.train_images), len(b.test_images), b.n_classes) == (20, 200, 2)
    assert a.train_images[0].shape == (32, 32)
    assert np.bincount(a.train_labels).tolist() == [10] * 4
    for t in (a, b):
        t.validate()
        for img in t.train_images:
            assert img.min() >= 0 and img.max() <= 1


def test_synth_deterministic():
    spec = SynthSpec(size=16, seed=11)
    a1, a2 = generate_orientation_task(spec), generate_orientation_task(spec)
    for x, y in zip(a1.train_images + a1.test_images, a2.train_images + a2.test_images):
        assert x.tobytes() == y.tobytes()
    other = generate_orientation_task(SynthSpec(size=16, seed=12))
    assert other.train_images[0].tobytes() != a1.train_images[0].tobytes()


def test_synth_noise_free_orientations():
    task = generate_orientation_task(SynthSpec(size=16, noise=0.0, train_per_class=3, test_per_class=1))
    horiz = task.train_images[0]  # class 0: stripes vary along x only
    np.testing.assert_allclose(horiz, np.broadcast_to(horiz[0], horiz.shape), atol=1e-12)
    vert = task.train_images[6]  # class 2: 90 degrees, varies along y only
    np.testing.assert_allclose(vert, np.broadcast_to(vert[:, :1], vert.shape), atol=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(size=7), dict(train_per_class=2), dict(noise=-0.1), dict(classes=1), dict(test_per_class=0)],
)
def test_synth_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        generate_frequency_task(SynthSpec(**kwargs))


def test_save_load_round_trip(tmp_path):
    task = generate_frequency_task(SynthSpec(size=12, train_per_class=3, test_per_class=2))
    back = load_dataset(save_dataset(task, tmp_path / "freq")).to_task()
    assert back.train_labels.tolist() == task.train_labels.tolist()
    assert back.test_labels.tolist() == task.test_labels.tolist()
    for x, y in zip(task.train_images, back.train_images):
        np.testing.assert_allclose(x, y, atol=0.5 / 255 + 1e-12)


def test_raw_pixel_baseline_frozen():
    a, b = generate_synth_pair()
    assert raw_pixel_accuracy(a, 0) == B0_ORIENTATION
    assert raw_pixel_accuracy(b, 0) == B0_FREQUENCY
