"""Write the two-document word-list fixture with a synthetic embedding slice.

Usage: python3 scripts/make_wordlist_fixture.py OUT_DIR

Vectors are GloVe text format, 50 dimensions, drawn around one centroid per
word group so related words sit close together.
"""

import json
import sys
from pathlib import Path

import numpy as np

DOCS = {
    "disc": {
        "LDA_B": "drive, disk, card, controller, hard, mb, file, scsi, bios, power",
        "LDA_C": "drive, disk, scsi, hard, card, controller, mb, floppy, ide, sale",
        "NVDM_B": "driver, drive, problem, card, time, file, thanks, need, email, work",
        "NVDM_C": "drive, driver, hard, scsi, window, cd, mb, floppy, disc, work",
        "llm": "formatting, magneto-optical, driver, disc, incompatible",
        "llm_topic_aware": "troubleshooting, formatting, incompatibility, magneto-optical, driver, disc, mounting",
        "human": "driver, disc, computer, hardware, software, memory, formatting, incompatible",
    },
    "wrong_world": {
        "LDA_B": "film, american, released, directed, football, album, summer, played, team, hospital",
        "LDA_C": "film, played, directed, baseball, league, australian, major, drama, football, award",
        "NVDM_B": "specie, album, school, known, located, north, film, directed, american, released",
        "NVDM_C": "film, album, released, second, south, new, directed, american, australian, known",
        "llm": "world, film, australian, directed, victoria",
        "llm_topic_aware": "film, industry, production, cinema, entertainment",
        "human": "film, movie, directed, director, australian, melbourne, victoria",
    },
}

MODELS = ["LDA_B", "LDA_C", "NVDM_B", "NVDM_C"]
KEYWORD_SOURCES = {"llm": "llm_plain", "llm_topic_aware": "llm_topic_aware", "human": "human"}

GROUPS = {
    "storage": "drive driver disk disc floppy scsi ide controller hard mb bios card magneto-optical formatting "
    "mounting cd file power",
    "computing": "incompatible incompatibility troubleshooting memory hardware software computer window problem email",
    "film": "film movie directed director cinema production entertainment industry released album drama award",
    "place": "australian american melbourne victoria south north world located",
    "sport": "football baseball league team played summer major",
    "misc": "time thanks need work second new known specie school hospital sale",
}

DIM = 50


def words(s):
    return [w.strip() for w in s.split(",")]


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(1985)
    lines = []
    for group, members in GROUPS.items():
        centroid = rng.normal(size=DIM)
        for w in members.split():
            v = centroid + 0.7 * rng.normal(size=DIM)
            lines.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    (out / "embeddings.txt").write_text("\n".join(lines) + "\n")

    for model in MODELS:
        rows = []
        for doc_id, lists in DOCS.items():
            ws = words(lists[model])
            raw = np.arange(len(ws), 0, -1, dtype=float)
            rows.append(json.dumps({"doc_id": doc_id, "words": ws, "weights": list(raw / raw.sum())}))
        (out / f"topical_{model}.jsonl").write_text("\n".join(rows) + "\n")
    for name, source in KEYWORD_SOURCES.items():
        rows = [json.dumps({"doc_id": d, "words": words(l[name]), "source": source}) for d, l in DOCS.items()]
        (out / f"keywords_{name}.jsonl").write_text("\n".join(rows) + "\n")
    docs = {
        "disc": "It's my understanding that, when you format a magneto-optical disc, (1) the formatting software "
        "installs a driver on the disc, (2) if you insert the disc in a different drive, then this driver is loaded "
        "into the computer's memory and then controls the drive, and (3) if this driver is incompatible with the "
        "drive, then the disc can not be mounted and/or properly read/written. Is that correct?",
        "wrong_world": "Wrong World. Wrong World is a 1985 Australian film directed by Ian Pringle. It was filmed "
        "in Nhill and Melbourne in Victoria Australia.",
    }
    rows = [json.dumps({"id": d, "text": t}) for d, t in docs.items()]
    (out / "documents.jsonl").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
