#!/usr/bin/env python3
"""Generate the bundled mini corpus (data/mini_corpus.jsonl).

Each thread has a two-word subject and answers drawn from three topical
perspectives, plus a few off-topic sentences. A handful of threads are built
to fail the thread heuristics or the example filters.
"""
import argparse
import json
import random

SUBJECTS = [
    "sourdough starter", "road bike", "basil plant", "guitar strings", "leather boots",
    "cast iron", "aquarium filter", "laptop battery", "wool sweater", "espresso machine",
    "tomato seedlings", "running shoes", "kitchen knives", "study schedule", "puppy training",
    "balcony garden", "camping stove", "vinyl records", "piano practice", "winter tires",
    "hiking backpack", "houseplant soil", "bread dough", "sewing machine", "fish tank",
    "coffee grinder", "mountain tent", "phone screen", "garden hose", "yoga mat",
    "watercolor paper", "paint brushes", "violin bow", "kayak paddle", "baby stroller",
    "compost bin", "ceramic glaze", "chess openings", "bonsai tree", "sleeping bag",
    "roof gutters", "bee hive", "herb garden", "wooden floor", "climbing rope",
    "swimming goggles", "rose bushes", "cheese board", "table saw", "snow boots",
]

PERSPECTIVES = [
    ["water", "moisture", "damp", "drying", "humid", "soak"],
    ["light", "sunny", "window", "shade", "bright", "glare"],
    ["budget", "price", "cheap", "costly", "savings", "spend"],
    ["clean", "wipe", "rinse", "soap", "scrub", "dust"],
    ["store", "shelf", "cupboard", "container", "box", "drawer"],
    ["routine", "daily", "weekly", "habit", "calendar", "reminder"],
    ["warm", "heat", "temperature", "chilly", "cool", "thermostat"],
    ["oil", "grease", "lubricant", "coat", "film", "wax"],
    ["inspect", "check", "crack", "wear", "damage", "fray"],
    ["patience", "slowly", "gentle", "calm", "steady", "pace"],
    ["expert", "shop", "mechanic", "teacher", "mentor", "advice"],
    ["replace", "spare", "swap", "backup", "upgrade", "new"],
]

TEMPLATES = [
    "for the {s} the {a} and {b} part matters because {c} keeps everything in order.",
    "with a {s} you want {a} first, then {b}, and later some {c} as well.",
    "my {s} did best once i focused on {a} with {b} and a little {c}.",
    "think about {a} and {b} for your {s}, since {c} makes a big difference.",
    "the trick with any {s} is steady {a}, careful {b} and regular {c}.",
]

OFF_TOPIC = [
    "good luck with everything and have fun.",
    "i hope this helps you out a bit.",
    "that is what worked for me anyway.",
    "let us know how it goes later on.",
]


def sentence(rng, subject, words):
    a, b, c = rng.sample(words[:4], 3)
    return rng.choice(TEMPLATES).format(s=subject, a=a, b=b, c=c).capitalize()


def answer_text(rng, subject, persp, n_sentences):
    parts = []
    for _ in range(n_sentences):
        parts.append(sentence(rng, subject, rng.choice(persp)))
    if rng.random() < 0.5:
        parts.append(rng.choice(OFF_TOPIC).capitalize())
    return " ".join(parts)


def thread(rng, idx, subject, kind):
    persp = [PERSPECTIVES[i] for i in rng.sample(range(len(PERSPECTIVES)), 3)]
    n_answers = 4 if kind == "few_answers" else rng.randint(5, 7)
    answers = []
    for j in range(n_answers):
        text = answer_text(rng, subject, persp, rng.randint(4, 6))
        if kind == "long_answer" and j == 0:
            text = " ".join([text] * 30)
        answers.append({"id": f"m{idx:02d}-a{j}", "text": text})
    if kind == "links":
        for a in answers:
            a["text"] += " See https://example.org/guide and www.example.com/tips for more."
    return {
        "id": f"m{idx:02d}",
        "subject": f"{subject} help",
        "content": f"what should i do about my {subject}?",
        "answers": answers,
        "source": "synthetic",
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=17)
    ap.add_argument("--out", default="data/mini_corpus.jsonl")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    kinds = {7: "few_answers", 19: "few_answers", 28: "long_answer", 41: "links"}
    with open(args.out, "w", encoding="utf-8") as f:
        for i, subject in enumerate(SUBJECTS):
            rec = thread(rng, i, subject, kinds.get(i, "normal"))
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
