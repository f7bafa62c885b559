"""Expected scores for the word-list fixture, computed independently.

Usage: python3 scripts/wordlist_oracle.py FIXTURE_DIR

Stems come from a hand-written table, assignment costs from exhaustive
search over injective maps and transport costs from scipy's LP solver.
Writes FIXTURE_DIR/expected.json.
"""

import itertools
import json
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

# Porter stems, worked out by hand for every word in the fixture.
STEM = {
    "album": "album", "american": "american", "australian": "australian", "award": "award",
    "baseball": "basebal", "bios": "bio", "card": "card", "cd": "cd", "cinema": "cinema",
    "computer": "comput", "controller": "control", "directed": "direct", "director": "director",
    "disc": "disc", "disk": "disk", "drama": "drama", "drive": "drive", "driver": "driver",
    "email": "email", "entertainment": "entertain", "file": "file", "film": "film",
    "floppy": "floppi", "football": "footbal", "formatting": "format", "hard": "hard",
    "hardware": "hardwar", "hospital": "hospit", "ide": "id", "incompatibility": "incompat",
    "incompatible": "incompat", "industry": "industri", "known": "known", "league": "leagu",
    "located": "locat", "magneto-optical": "magneto-optic", "major": "major", "mb": "mb",
    "melbourne": "melbourn", "memory": "memori", "mounting": "mount", "movie": "movi",
    "need": "need", "new": "new", "north": "north", "played": "plai", "power": "power",
    "problem": "problem", "production": "product", "released": "releas", "sale": "sale",
    "school": "school", "scsi": "scsi", "second": "second", "software": "softwar",
    "south": "south", "specie": "speci", "summer": "summer", "team": "team", "thanks": "thank",
    "time": "time", "troubleshooting": "troubleshoot", "victoria": "victoria", "window": "window",
    "work": "work", "world": "world",
}


def read_jsonl(path):
    return {r["doc_id"]: r for r in map(json.loads, path.read_text().splitlines())}


def read_embeddings(path):
    table = {}
    for line in path.read_text().splitlines():
        parts = line.split(" ")
        table[parts[0]] = np.array(parts[1:], dtype=np.float32).astype(np.float64)
    return table


def cosine_distance(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = sum(x * x for x in a)
    nb = sum(y * y for y in b)
    return min(max(1.0 - dot / np.sqrt(na * nb), 0.0), 2.0)


def overlap(w, k):
    shared = {STEM[x] for x in w} & {STEM[x] for x in k}
    return len(shared) / (len(w) + len(k))


def assignment(c):
    n, m = c.shape
    if n < m:
        return assignment(c.T)
    return min(sum(c[r, j] for j, r in enumerate(rows)) for rows in itertools.permutations(range(n), m))


def transport(c, a, b):
    n, m = c.shape
    eq = []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m:(i + 1) * m] = 1
        eq.append(row)
    for j in range(m):
        col = np.zeros(n * m)
        col[j::m] = 1
        eq.append(col)
    res = linprog(c.ravel(), A_eq=np.array(eq), b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    assert res.status == 0
    return float(res.fun)


def main():
    fixture = Path(sys.argv[1])
    emb = read_embeddings(fixture / "embeddings.txt")
    expected = {}
    for tpath in sorted(fixture.glob("topical_*.jsonl")):
        model = tpath.stem[len("topical_"):]
        topical = read_jsonl(tpath)
        for kpath in sorted(fixture.glob("keywords_*.jsonl")):
            source = kpath.stem[len("keywords_"):]
            for doc_id, krec in read_jsonl(kpath).items():
                w, weights, k = topical[doc_id]["words"], np.array(topical[doc_id]["weights"]), krec["words"]
                c = np.array([[cosine_distance(emb[x], emb[y]) for y in k] for x in w])
                target = np.full(len(k), 1.0 / len(k))
                expected.setdefault(doc_id, {}).setdefault(model, {})[source] = {
                    "s_overlap": overlap(w, k),
                    "s_oa": assignment(c),
                    "s_ot": transport(c, weights / weights.sum(), target),
                }
    (fixture / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
