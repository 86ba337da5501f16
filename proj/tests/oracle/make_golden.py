"""Writes the golden hybrid run for tests/data/fixture12 using refimpl only.

    python3 tests/oracle/make_golden.py
"""
import json
import os
import struct
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import refimpl  # noqa: E402

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
FIX = os.path.join(ROOT, "data", "fixture12")

K1, B, ALPHA, EPS, K, FLOOR, MAX_SYN, DIM, SEED = 1.2, 0.75, 1.0, 60.0, 3, 0.1, 2, 8, 42


def f32(x):
    return struct.unpack("<f", struct.pack("<f", x))[0]


def load_vectors(path, through_float32):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                obj = json.loads(line)
                v = refimpl.normalize(obj["vector"])
                if through_float32:
                    # The vector store persists float32 and renormalizes on load.
                    v = refimpl.normalize([f32(x) for x in v])
                out[obj["id"]] = v
    return out


def main():
    stop = refimpl.load_stopwords()
    records, corpus = refimpl.read_halubench(os.path.join(FIX, "corpus.jsonl"))
    lex_path = os.path.join(FIX, "lexicon.tsv")
    lex = refimpl.load_lexicon(lex_path)
    bm25 = refimpl.Bm25(corpus, stop, K1, B)
    docs = load_vectors(os.path.join(FIX, "doc_embeddings.jsonl"), True)
    queries = load_vectors(os.path.join(FIX, "query_embeddings.jsonl"), False)

    fp = refimpl.fingerprint(K1, B, ALPHA, EPS, K, FLOOR, MAX_SYN, False, DIM, lex_path, stop)
    lines = ["# hybridrag-provenance command=retrieve retriever=hybrid config_hash=%s seed=%d corpus_hash=%s"
             % (refimpl.hex64(refimpl.fnv1a(fp.encode())), SEED, refimpl.hex64(refimpl.corpus_hash(corpus)))]
    for r in sorted(records, key=lambda r: r["id"].encode()):
        terms, added = refimpl.expand(refimpl.tokenize(r["question"], stop), lex, MAX_SYN)
        qvec = queries[refimpl.hex64(refimpl.fnv1a(refimpl.expanded_text(r["question"], added).encode()))]
        sparse = [(d, s) for d, s in ((d, bm25.score(terms, d)) for d in corpus) if s > 0.0]
        sparse = refimpl.rank(sparse, K)
        dense = refimpl.rank([(d, max(-1.0, min(1.0, refimpl.dot(qvec, v)))) for d, v in docs.items()], K)
        ws, wd = refimpl.weights(refimpl.specificity_norm(terms, bm25), ALPHA, FLOOR)
        fused = refimpl.rrf([(sparse, ws), (dense, wd)], EPS)[:K]
        for i, (d, s) in enumerate(fused):
            lines.append("%s %s %d %.10f hybrid" % (r["id"], d, i + 1, s))
    with open(os.path.join(FIX, "golden_hybrid_run.txt"), "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
