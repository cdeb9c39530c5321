"""Random evaluation records and a naive metric recomputation to check score() against."""

from __future__ import annotations

import random

from faceqa.evaluation import EvalRecord
from faceqa.parsers import ParsedAnswer, unparseable
from faceqa.schema import LETTERS, FaceImageRef, GoldLabel, QAPair

CATEGORIES = {"age": "age", "gender": "yes_no", "au": "yes_no", "attribute": "yes_no",
              "expression": "multiple_choice"}


def random_record(rng: random.Random, i: int, category: str | None = None) -> EvalRecord:
    category = category or rng.choice(sorted(CATEGORIES))
    task = CATEGORIES[category]
    img = FaceImageRef(f"img{i}", f"u{i}", "other")
    options = None
    if task == "age":
        gold = GoldLabel.number(rng.randint(1, 100))
        r = rng.random()
        parsed = (unparseable("no_number") if r < 0.1 else
                  ParsedAnswer("number", gold.value, "", "integer") if r < 0.3 else
                  ParsedAnswer("number", rng.randint(1, 100), "", "integer"))
    elif task == "yes_no":
        gold = GoldLabel.boolean(rng.random() < 0.5)
        parsed = (unparseable("no_token") if rng.random() < 0.1 else
                  ParsedAnswer("yes_no", rng.random() < 0.5, "", "first_token"))
    else:
        k = rng.randint(2, 8)
        options = tuple((LETTERS[j], f"class{j}") for j in range(k))
        gold = GoldLabel.letter(rng.choice(options)[0])
        parsed = (unparseable("ambiguous") if rng.random() < 0.1 else
                  ParsedAnswer("letter", rng.choice(options)[0], "", "leading_letter"))
    qa = QAPair(f"q{i}", img, task, f"question {i}", gold, options, category=category)
    return EvalRecord(qa, "", 0.0, parsed, "mock")


def random_records(rng: random.Random, n: int) -> list[EvalRecord]:
    return [random_record(rng, i) for i in range(n)]


def brute_force_metrics(records) -> dict[str, dict]:
    """Recompute every metric with plain loops, one category at a time."""
    out = {}
    for category in sorted({r.qa.category for r in records}):
        rows = [r for r in records if r.qa.category == category]
        n = len(rows)
        parsed = [r for r in rows if r.parsed.variant != "unparseable"]
        correct = 0
        for r in parsed:
            if r.parsed.value == r.qa.gold.value:
                correct += 1
        m = {"n": n, "n_parsed": len(parsed), "accuracy": correct / n, "parse_rate": len(parsed) / n}
        task = rows[0].qa.task
        if task == "age":
            errors = [abs(r.parsed.value - r.qa.gold.value) for r in parsed]
            m["mae"] = sum(errors) / len(errors) if errors else None
            m["mae_excluded"] = n - len(parsed)
        if task == "yes_no":
            tp = sum(1 for r in parsed if r.parsed.value and r.qa.gold.value)
            fp = sum(1 for r in parsed if r.parsed.value and not r.qa.gold.value)
            fn = sum(1 for r in parsed if not r.parsed.value and r.qa.gold.value)
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            m["f1"] = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[category] = m
    return out


def expression_fixture(n: int = 1000, n_correct: int = 912, n_unparsed: int = 30,
                       seed: int = 0) -> list[EvalRecord]:
    """Expression records with exactly ``n_correct`` correct parsed answers."""
    rng = random.Random(seed)
    classes = ("surprise", "fear", "disgust", "happiness", "sadness", "anger", "neutral")
    options = tuple(zip(LETTERS, classes))
    outcome = ["correct"] * n_correct + ["unparsed"] * n_unparsed
    outcome += ["wrong"] * (n - len(outcome))
    rng.shuffle(outcome)
    recs = []
    for i, kind in enumerate(outcome):
        gold = rng.choice(options)[0]
        if kind == "correct":
            parsed = ParsedAnswer("letter", gold, gold, "leading_letter")
        elif kind == "wrong":
            wrong = rng.choice([lt for lt, _ in options if lt != gold])
            parsed = ParsedAnswer("letter", wrong, wrong, "leading_letter")
        else:
            parsed = unparseable("no_match")
        qa = QAPair(f"raf{i}", FaceImageRef(f"raf{i}", "u", "rafdb"), "multiple_choice",
                    "What's the expression?", GoldLabel.letter(gold), options,
                    category="expression")
        recs.append(EvalRecord(qa, "", 0.0, parsed, "fixture"))
    return recs


def zero_shot_fixture(accuracies: dict[str, float], n: int = 1000) -> list[EvalRecord]:
    """Yes/no zero-shot records where category c has exactly round(acc * n) correct answers."""
    recs = []
    for cat, acc in accuracies.items():
        k = round(acc * n)
        for i in range(n):
            gold = i % 2 == 0
            answer = gold if i < k else not gold
            qa = QAPair(f"{cat}{i}", FaceImageRef(f"{cat}{i}", "u", "zero_shot"), "yes_no",
                        "Q?", GoldLabel.boolean(gold), category=f"zs_{cat}")
            recs.append(EvalRecord(qa, "", 0.0, ParsedAnswer("yes_no", answer, "", "first_token"),
                                   "fixture"))
    return recs
