import math
from pathlib import Path

import pytest

import hypertropy as ht

DATA = Path(__file__).resolve().parents[2] / "data"


def barbell():
    edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)]
    return ht.Graph(6, edges)


def test_graph_from_edges():
    g = ht.Graph(3, [(0, 1, 1.0), (1, 0, 2.0), (1, 2, 1.0), (2, 2, 5.0)])
    assert g.num_nodes == 3
    assert g.edges == [(0, 1, 3.0), (1, 2, 1.0)]
    assert g.volume == pytest.approx(8.0)
    assert g.is_connected()


def test_entropy_values():
    g = barbell()
    h1 = ht.one_dim_entropy(g)
    degrees = [2, 2, 3, 3, 2, 2]
    assert h1 == pytest.approx(-sum(d / 14 * math.log2(d / 14) for d in degrees), abs=1e-12)
    brute = ht.brute_force_entropy(g)
    assert brute["value"] == pytest.approx(ht.two_level_value(g, [0, 0, 0, 1, 1, 1]), abs=1e-12)
    ne = ht.normalized_entropy(g)
    assert ne["tau"] == pytest.approx(brute["value"] / h1)
    assert ne["conductance"] == pytest.approx(1 / 7)


def test_greedy_trajectory_decreases():
    result = ht.cse_greedy(barbell())
    traj = result["trajectory"]
    assert all(b < a for a, b in zip(traj, traj[1:]))


def test_metrics():
    assert ht.nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert ht.ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    assert ht.auc_score([2.0, 3.0], [1.0, 2.0]) == pytest.approx(0.875)


def test_errors_map_to_python_exceptions():
    with pytest.raises(FileNotFoundError):
        ht.load_graph(str(DATA / "absent.tsv"))
    with pytest.raises(ValueError):
        ht.parse_edge_list("0\t1\n1\t2\tabc\n")
    karate = ht.load_graph(str(DATA / "karate.tsv"))
    with pytest.raises(ht.SizeCapError):
        ht.brute_force_entropy(karate)


def test_cluster_barbell():
    g = barbell()
    report = ht.cluster(g, model={"widths": [6, 2, 1]}, seeds=[0, 1], threads=2)
    assert len(report["runs"]) == 2
    for run in report["runs"]:
        assert len(run["labels"]) == 6
        assert len(run["loss_history"]) == 500
    best = report["runs"][0]
    assert best["labels"][:3] == [best["labels"][0]] * 3
    assert report["structural_information"] == pytest.approx(ht.brute_force_entropy(g)["value"], abs=1e-6)


def test_cluster_is_deterministic():
    g = ht.load_graph(str(DATA / "karate.tsv"), labels=str(DATA / "karate_labels.tsv"))
    a = ht.cluster(g, train={"epochs": 30}, seeds=[5], k=4, threads=1)
    b = ht.cluster(g, train={"epochs": 30}, seeds=[5], k=4, threads=2)
    assert a["runs"][0]["loss_history"] == b["runs"][0]["loss_history"]
    assert a["runs"][0]["labels"] == b["runs"][0]["labels"]
    assert 0.0 <= a["nmi"] <= 1.0
