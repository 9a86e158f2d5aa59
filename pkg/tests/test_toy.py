import numpy as np

from secu.toy import run_toy, save_toy_csv, search


class TestToy:
    def test_deterministic(self):
        a = run_toy(3)
        b = run_toy(3)
        assert np.array_equal(a.points, b.points)
        assert a.acc_uniform == b.acc_uniform
        assert a.acc_hardness == b.acc_hardness

    def test_shapes(self):
        r = run_toy(0)
        assert r.points.shape == (20, 2)
        assert r.labels.shape == (20,)
        assert r.centers_uniform.shape == (2, 2)
        assert r.centers_hardness.shape == (2, 2)
        np.testing.assert_allclose(np.linalg.norm(r.centers_uniform, axis=1), 1.0, atol=1e-9)

    def test_search_finds_separating_configuration(self):
        r = search(max_seeds=200)
        assert r.acc_hardness == 1.0
        assert r.acc_uniform < 1.0

    def test_csv_contents(self, tmp_path):
        r = run_toy(5)
        path = tmp_path / "toy.csv"
        save_toy_csv(r, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "kind,method,x,y,label,acc"
        kinds = [line.split(",")[0] for line in lines[1:]]
        assert kinds.count("point") == 20
        assert kinds.count("center") == 4
        assert kinds.count("acc") == 2
