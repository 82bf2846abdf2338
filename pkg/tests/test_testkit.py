import ast
from importlib import resources

import numpy as np
import pytest
from PIL import Image

from strokestack import testkit
from strokestack.compositor import stack_sequential
from strokestack.testkit import RandomInstance, oracle_expand, oracle_grads, oracle_topk


def test_instances_regenerate_bitwise():
    for style in ("soft", "binary"):
        a1, c1 = RandomInstance(42, 9, style=style).frames()
        a2, c2 = RandomInstance(42, 9, style=style).frames()
        assert np.array_equal(a1, a2) and np.array_equal(c1, c2)
    assert np.array_equal(RandomInstance(1, 5, kind="bezier").sequence().strokes,
                          RandomInstance(1, 5, kind="bezier").sequence().strokes)


def test_binary_style_is_binary():
    a, _ = RandomInstance(3, 10, style="binary").frames()
    assert set(np.unique(a)) <= {0.0, 1.0}


def test_expand_single_and_zero():
    a, c = RandomInstance(0, 1, color_maps=True).frames()
    assert np.allclose(oracle_expand(a, c), a[0][..., None] * c[0])
    assert not oracle_expand(np.zeros((3, 4, 4)), np.ones((3, 3))).any()
    with pytest.raises(ValueError):
        oracle_expand(np.zeros((0, 4, 4)), np.zeros((0, 3)))


def test_expand_matches_sequential():
    a, c = RandomInstance(8, 12, 8, 8).frames()
    assert np.abs(oracle_expand(a, c) - stack_sequential(a, c)).max() <= 1e-5


def test_last_color_gradient_is_last_alpha():
    a, c = RandomInstance(5, 6, 6, 6).frames()
    _, dc = oracle_grads(a, c)
    assert np.allclose(dc[-1], a[-1][..., None])


def test_topk_oracle_sentinels():
    a = np.zeros((3, 2, 2))
    a[0, 0, 0] = a[2, 0, 0] = 0.9
    sel = oracle_topk(a, np.ones((3, 3)), 5)
    assert sel.indices[:, 0, 0].tolist() == [0, 0, 0, 1, 3]
    assert not sel.indices[:, 1, 1].any() and not sel.gathered_alpha[:, 1, 1].any()


def test_bundled_images():
    for name in ("flat", "step", "photo"):
        with resources.as_file(resources.files("strokestack") / "data" / f"{name}.png") as p, Image.open(p) as im:
            assert im.size == (128, 128) and im.mode == "RGB"
        img = testkit.load_fixture(name)
        assert img.shape == (128, 128, 3) and 0 <= img.min() and img.max() <= 1
    flat = testkit.load_fixture("flat")
    assert np.all(flat == flat[0, 0])
    with pytest.raises(KeyError):
        testkit.load_fixture("nope")


def test_oracles_share_no_code_with_production():
    tree = ast.parse(open(testkit.__file__).read())
    imported = {(node.module, alias.name) for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)
                for alias in node.names}
    # only plain data containers come from the package itself
    assert {m for m in imported if m[0] and not m[0].startswith(("__future__", "importlib", "dataclasses", "PIL"))} \
        == {("compositor", "TopKSelection"), ("core", "StrokeKind"), ("core", "StrokeSequence")}
