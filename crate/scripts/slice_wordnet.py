"""Cut a WordNet index slice covering the words of a fixture directory.

Usage: python3 scripts/slice_wordnet.py WORDNET_DICT_DIR FIXTURE_DIR [EXTRA_WORD ...]

Keeps the license header of every index file and each entry whose lemma is
a fixture word or one of its inflectional base forms.
"""

import json
import re
import sys
from pathlib import Path

SUFFIXES = {
    "noun": [("s", ""), ("ses", "s"), ("xes", "x"), ("zes", "z"), ("ches", "ch"), ("shes", "sh"), ("men", "man"), ("ies", "y")],
    "verb": [("s", ""), ("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"), ("ed", ""), ("ing", "e"), ("ing", "")],
    "adj": [("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
    "adv": [],
}


def candidates(word):
    out = {word}
    frontier = {word}
    for _ in range(2):
        nxt = set()
        for form in frontier:
            for rules in SUFFIXES.values():
                for old, new in rules:
                    if form.endswith(old) and len(form) > len(old):
                        nxt.add(form[: -len(old)] + new)
        out |= nxt
        frontier = nxt
    return out


def fixture_words(fixture):
    words = set()
    texts = []
    vocab = fixture / "model" / "vocab.txt"
    if vocab.exists():
        words |= set(vocab.read_text().split())
    for name in ("documents.jsonl", "human_keywords.jsonl", "transcript.jsonl"):
        path = fixture / name
        if not path.exists():
            continue
        for line in path.read_text().splitlines():
            rec = json.loads(line)
            texts.append(rec.get("text", ""))
            texts.append(rec.get("response", ""))
            words |= {w.lower() for w in rec.get("words", [])}
    for t in texts:
        words |= {w.lower() for w in re.findall(r"[A-Za-z]+", t)}
        for item in re.split(r"[,;\n]", t):
            item = re.sub(r"^[^A-Za-z]*", "", item).strip().strip('"').lower()
            if " " in item and re.fullmatch(r"[a-z ]+", item):
                words.add(item)
    return words


def main():
    src = Path(sys.argv[1])
    fixture = Path(sys.argv[2])
    words = fixture_words(fixture) | {w.lower() for w in sys.argv[3:]}
    wanted = set()
    for w in words:
        wanted |= candidates(w.replace(" ", "_"))
    out = fixture / "wordnet"
    out.mkdir(exist_ok=True)
    for pos in ("noun", "verb", "adj", "adv"):
        kept = []
        for line in (src / f"index.{pos}").read_text().splitlines(keepends=True):
            if line.startswith("  ") or line.split(" ", 1)[0] in wanted:
                kept.append(line)
        (out / f"index.{pos}").write_text("".join(kept))
    license_src = src.parent / "LICENSE"
    if license_src.exists():
        (out / "LICENSE").write_text(license_src.read_text())


if __name__ == "__main__":
    main()
