"""Builds tests/data/mini_bpe.tiktoken, a small byte-level BPE vocabulary
trained on a fixed English snippet with the cl100k split pattern, and prints
reference encodings computed by tiktoken for the tokenizer tests."""
import base64
import collections
import json
import sys

import regex
import tiktoken

PAT = r"""(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+"""

CORPUS = """
The cat sat on the mat. The dog is not happy, but the cat is happy.
Hello hello hello world! It's a test of the tokenizer; we'll see what they've done.
Numbers like 12345 and 2024 appear in the text. The weather is fine today.
Information retrieval systems rank documents by relevance to the query.
Similarity metrics can be evaluated on robustness and sensitivity tasks.
""" * 3

N_MERGES = 300


def train():
    ranks = {bytes([b]): b for b in range(256)}
    words = collections.Counter(regex.findall(PAT, CORPUS))
    seqs = {w: [bytes([b]) for b in w.encode()] for w in words}
    while len(ranks) < 256 + N_MERGES:
        pairs = collections.Counter()
        for w, seq in seqs.items():
            for a, b in zip(seq, seq[1:]):
                pairs[(a, b)] += words[w]
        if not pairs:
            break
        (a, b), _ = max(pairs.items(), key=lambda kv: (kv[1], kv[0]))
        merged = a + b
        ranks[merged] = len(ranks)
        for w, seq in seqs.items():
            out, i = [], 0
            while i < len(seq):
                if i + 1 < len(seq) and seq[i] == a and seq[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            seqs[w] = out
    return ranks


def main(path):
    ranks = train()
    with open(path, "w") as f:
        for tok, r in sorted(ranks.items(), key=lambda kv: kv[1]):
            f.write(base64.b64encode(tok).decode() + " " + str(r) + "\n")
    enc = tiktoken.Encoding("mini", pat_str=PAT, mergeable_ranks=ranks, special_tokens={})
    samples = [
        "", "hello hello", "Hello hello hello world!", "The cat sat on the mat.",
        "It's 2024; they've said 1234567 times.", "  leading and trailing  ",
        "line one\n\nline two\r\n", "café naïve résumé", "日本語のテキスト",
        "tabs\tand   spaces ... ???!", "a a a", "The dog is not happy, but the cat is happy.",
    ]
    out = [{"text": s, "ids": enc.encode(s)} for s in samples]
    print(json.dumps(out, ensure_ascii=False))


if __name__ == "__main__":
    main(sys.argv[1])
