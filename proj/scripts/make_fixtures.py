#!/usr/bin/env python3
"""Writes the bundled fixture datasets under fixtures/.

Output is deterministic (seeded), so rerunning reproduces the committed files.
All text is synthetic: short templated news-style prose over five topics.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"
RNG = random.Random(20240601)

TOPICS = {
    "weather": {
        "subjects": ["The storm", "A cold front", "The heat wave", "Heavy rain", "The coastal fog"],
        "places": ["the northern valley", "the harbor district", "the mountain towns", "the river delta"],
        "facts": [
            "{s} is expected to reach {p} by {day}.",
            "Forecasters said {n} millimeters of rain were recorded overnight.",
            "Schools in {p} were closed for {k} days.",
            "Farmers can not plant until the soil dries.",
            "Wind speeds have reached {n} kilometers per hour.",
            "The warning does not apply to inland areas.",
            "Residents are asked to avoid travel after {hour} o'clock.",
        ],
        "summary": "{s} brings disruption to {p}.",
    },
    "finance": {
        "subjects": ["The central bank", "A regional lender", "The stock index", "The currency", "A pension fund"],
        "places": ["the capital", "the eastern markets", "the export sector", "the housing market"],
        "facts": [
            "{s} is raising its key rate by {k} points.",
            "Analysts said prices in {p} rose {n} percent last quarter.",
            "The board will meet again on {day}.",
            "Investors have not seen such losses since {year}.",
            "{s} was trading near a {k} year low.",
            "Officials do not expect a recession this year.",
            "Lending to small firms has fallen by {n} million.",
        ],
        "summary": "{s} moves as pressure builds in {p}.",
    },
    "sports": {
        "subjects": ["The home team", "The veteran striker", "The national squad", "The young keeper", "The coach"],
        "places": ["the cup final", "the league table", "the away match", "the training camp"],
        "facts": [
            "{s} was beaten {k} to {k2} in {p}.",
            "The club has won {n} of its last {n2} games.",
            "Fans are waiting for news about the injured captain.",
            "The referee did award a late penalty on {day}.",
            "{s} will not travel to the next fixture.",
            "Ticket sales were up {n} percent on last season.",
            "Players can rest for {k} days before the derby.",
        ],
        "summary": "{s} struggles ahead of {p}.",
    },
    "health": {
        "subjects": ["The new clinic", "A vaccine trial", "The hospital board", "The health ministry", "A research team"],
        "places": ["rural districts", "the children's ward", "the city center", "the northern province"],
        "facts": [
            "{s} is treating {n} patients a week in {p}.",
            "Doctors said waiting times fell by {k} hours.",
            "The trial was stopped early in {year}.",
            "Nurses have asked for {n} more beds.",
            "{s} does not yet have enough staff.",
            "Results will be published on {day}.",
            "Patients are advised to book online.",
        ],
        "summary": "{s} expands care in {p}.",
    },
    "technology": {
        "subjects": ["The chip maker", "A startup", "The software update", "The new phone", "The data center"],
        "places": ["the consumer market", "the cloud business", "the research lab", "the factory floor"],
        "facts": [
            "{s} is shipping {n} thousand units to {p}.",
            "Engineers said the battery lasts {k} hours longer.",
            "The launch was delayed until {day}.",
            "{s} has not disclosed its prices.",
            "Sales in {p} grew {n} percent in {year}.",
            "Users can not install the update on older devices.",
            "The company will hire {n} engineers next year.",
        ],
        "summary": "{s} pushes into {p}.",
    },
}

DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]


def fill(template, topic, subject=None, place=None):
    t = TOPICS[topic]
    return template.format(
        s=subject or RNG.choice(t["subjects"]),
        p=place or RNG.choice(t["places"]),
        day=RNG.choice(DAYS),
        n=RNG.randint(3, 950),
        n2=RNG.randint(10, 40),
        k=RNG.randint(2, 9),
        k2=RNG.randint(0, 1),
        hour=RNG.randint(5, 11),
        year=RNG.randint(1995, 2019),
    )


def document(topic, sentences):
    t = TOPICS[topic]
    subject, place = RNG.choice(t["subjects"]), RNG.choice(t["places"])
    facts = RNG.sample(t["facts"], k=min(sentences, len(t["facts"])))
    text = " ".join(fill(f, topic, subject, place) for f in facts)
    return text, fill(t["summary"], topic, subject, place), subject, place


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def main():
    topics = sorted(TOPICS)

    pairs = []
    for i in range(50):
        topic = topics[i % len(topics)]
        text, summary, _, _ = document(topic, RNG.randint(4, 7))
        pairs.append({"id": f"pair-{i:03d}", "text": text, "summary": summary})
    write_jsonl(ROOT / "pairs.jsonl", pairs)

    comparisons = []
    for i in range(40):
        topic = topics[i % len(topics)]
        post, _, subject, place = document(topic, 6)
        faithful = " ".join(post.split(". ")[:2]).rstrip(".") + "."
        other = fill(RNG.choice(TOPICS[topics[(i + 2) % len(topics)]]["facts"]),
                     topics[(i + 2) % len(topics)])
        good_first = RNG.random() < 0.5
        # Annotators usually, not always, prefer the faithful summary.
        choice = (0 if good_first else 1) if RNG.random() < 0.8 else (1 if good_first else 0)
        comparisons.append({
            "id": f"cmp-{i:03d}", "post": post,
            "summary_a": faithful if good_first else other,
            "summary_b": other if good_first else faithful,
            "choice": choice, "subset": "tldr" if i % 2 == 0 else "cnndm",
        })
    write_jsonl(ROOT / "comparisons.jsonl", comparisons)

    axis = []
    for i in range(40):
        topic = topics[i % len(topics)]
        text, summary, _, _ = document(topic, 5)
        sentences = text.split(". ")
        keep = RNG.randint(0, len(sentences))
        body = ". ".join(sentences[:keep]).rstrip(".")
        cand = (summary + " " + body + ".").strip() if keep else summary
        quality = 1 + round(6 * keep / len(sentences))
        jitter = lambda: max(1, min(7, quality + RNG.choice([-1, 0, 0, 1])))
        axis.append({
            "id": f"axis-{i:03d}", "text": text, "summary": cand,
            "ratings": {"overall": jitter(), "accuracy": jitter(), "coverage": jitter(), "coherence": jitter()},
        })
    write_jsonl(ROOT / "axis_evals.jsonl", axis)

    sets = []
    for s in range(3):
        chosen = RNG.sample(topics, k=3 + s % 2)
        texts, labels = [], []
        for topic in chosen:
            for _ in range(8):
                text, _, _, _ = document(topic, 2)
                texts.append(text)
                labels.append(topic)
        order = list(range(len(texts)))
        RNG.shuffle(order)
        sets.append({"set_id": f"set-{s}", "texts": [texts[j] for j in order], "labels": [labels[j] for j in order]})
    write_jsonl(ROOT / "clustering_sets.jsonl", sets)

    rdir = ROOT / "retrieval"
    corpus, queries, qrels = [], [], []
    docs_by_topic = {t: [] for t in topics}
    for i in range(30):
        topic = topics[i % len(topics)]
        text, summary, subject, place = document(topic, 3)
        did = f"doc-{i:03d}"
        corpus.append({"_id": did, "title": summary.rstrip("."), "text": text})
        docs_by_topic[topic].append((did, subject, place))
    qi = 0
    for topic in topics:
        for did, subject, place in docs_by_topic[topic][:2]:
            qid = f"q-{qi:02d}"
            queries.append({"_id": qid, "text": f"{subject.lower()} {place}"})
            qrels.append((qid, did, 1))
            for other, s2, p2 in docs_by_topic[topic]:
                if other != did and s2 == subject:
                    qrels.append((qid, other, 1))
            qi += 1
    queries.append({"_id": f"q-{qi:02d}", "text": "an unjudged question"})
    write_jsonl(rdir / "corpus.jsonl", corpus)
    write_jsonl(rdir / "queries.jsonl", queries)
    (rdir / "qrels").mkdir(parents=True, exist_ok=True)
    with (rdir / "qrels" / "test.tsv").open("w", encoding="utf-8") as f:
        f.write("query-id\tcorpus-id\tscore\n")
        for q, d, s in qrels:
            f.write(f"{q}\t{d}\t{s}\n")

    config = {
        "seed": 42,
        "jobs": 2,
        "subjects": ["levenshtein", "rouge", "jaccard", "bm25", "mock-v1"],
        "tasks": ["human_preference", "robustness", "sensitivity", "clustering", "retrieval"],
        "output": "report.json",
        "embedding": {"providers": [{"provider_id": "mock", "model_id": "mock-v1", "dimension": 256}]},
        "datasets": {
            "human_preference": {"comparisons": "comparisons.jsonl", "axis_evals": "axis_evals.jsonl"},
            "robustness": [{"name": "news", "path": "pairs.jsonl"}],
            "sensitivity": [{"name": "news", "path": "pairs.jsonl"}],
            "clustering": [{"name": "topics", "path": "clustering_sets.jsonl"}],
            "retrieval": [{"name": "mini", "path": "retrieval"}],
        },
        "clustering": {"max_items": 2000},
        "retrieval": {"gain": "linear"},
    }
    (ROOT / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
