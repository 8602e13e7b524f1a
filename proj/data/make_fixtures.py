"""Regenerates the bundled graph fixtures.

karate: Zachary's club (networkx edge list) with the common 4-community labels.
football: seeded planted-partition graph shaped like the college football
network (115 teams, 12 conferences, 613 games).
"""
import random

import networkx as nx

KARATE_LABELS = [1, 1, 1, 1, 3, 3, 3, 1, 0, 1, 3, 1, 1, 1, 0, 0, 3, 1, 0, 1, 0, 1,
                 0, 0, 2, 2, 0, 0, 2, 0, 0, 2, 0, 0]


def write_edges(path, header, edges):
    with open(path, "w") as f:
        if header:
            f.write(f"# {header}\n")
        for u, v in edges:
            f.write(f"{u}\t{v}\n")


def write_labels(path, labels):
    with open(path, "w") as f:
        for i, c in enumerate(labels):
            f.write(f"{i}\t{c}\n")


def karate():
    g = nx.karate_club_graph()
    edges = sorted((min(a, b), max(a, b)) for a, b in g.edges())
    write_edges("karate.tsv", "Zachary karate club, 34 nodes, 78 undirected unit-weight edges", edges)
    write_labels("karate_labels.tsv", KARATE_LABELS)


def barbell():
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]
    write_edges("barbell6.tsv", "two triangles {0,1,2} and {3,4,5} joined by the bridge 2-3", edges)
    write_labels("barbell6_labels.tsv", [0, 0, 0, 1, 1, 1])
    write_edges("triangle.tsv", None, [(0, 1), (1, 2), (0, 2)])


def football():
    rng = random.Random(20021)
    sizes = [9, 8, 11, 12, 10, 5, 13, 8, 10, 12, 7, 10]
    labels = [c for c, s in enumerate(sizes) for _ in range(s)]
    n = len(labels)
    edges = set()
    for c in range(len(sizes)):
        m = [i for i in range(n) if labels[i] == c]
        p = 0.15 if c == 5 else 0.78  # group 5 plays the role of the independents
        for a in range(len(m)):
            for b in range(a + 1, len(m)):
                if rng.random() < p:
                    edges.add((m[a], m[b]))
    while len(edges) < 613:
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or labels[u] == labels[v]:
            continue
        edges.add((min(u, v), max(u, v)))
    write_edges("football.tsv",
                "football surrogate: seeded planted partition, 115 nodes, 12 groups, 613 unit-weight edges",
                sorted(edges))
    write_labels("football_labels.tsv", labels)


if __name__ == "__main__":
    karate()
    barbell()
    football()
