#!/usr/bin/env python3
"""Builds the bundled test corpus.

Outputs, all deterministic:
  problems.jsonl        50 arithmetic word problems with integer answers
  solutions.jsonl       per problem/model: 1 correct, 1 wrong sample; 40
                        extra samples whose final step is correct but left
                        unsimplified (these must be filtered out, not kept)
  analyzer_outputs.jsonl  raw analyzer responses with expected parses
  static_verdict_cv.txt        classifier verdict fixture (context value error)
  static_verdict_uc.txt        classifier verdict fixture (unit conversion error)
  questions.jsonl       questions for the retrieval-augmented answering CLI
  predictions.jsonl     repeated-classification fixtures for eval-consistency
  offline_config.json   pipeline config sized for the offline corpus
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
MODELS = ["alpha-7b", "beta-13b", "gamma-34b", "delta-70b"]

TEMPLATES = [
    (
        "{name} has {a} marbles and buys {b} bags with {c} marbles each. "
        "How many marbles does {name} have now?",
        lambda a, b, c: a + b * c,
    ),
    (
        "A baker makes {a} trays of {b} rolls every morning. {c} rolls burn. "
        "How many rolls can the baker sell?",
        lambda a, b, c: a * b - c,
    ),
    (
        "{name} reads {a} pages per day for {b} days and then {c} more pages. "
        "How many pages did {name} read in total?",
        lambda a, b, c: a * b + c,
    ),
    (
        "A crate holds {a} bottles. A store receives {b} crates and sells {c} "
        "bottles. How many bottles are left?",
        lambda a, b, c: a * b - c,
    ),
    (
        "{name} saves {a} dollars each week. After {b} weeks {name} spends {c} "
        "dollars on a gift. How many dollars are left?",
        lambda a, b, c: a * b - c,
    ),
]

NAMES = ["Mara", "Theo", "Ivy", "Callum", "Priya", "Jonas", "Lena", "Omar"]


def correct_text(a, b, c, gold, template_index):
    if template_index == 0:
        steps = [
            f"The bags hold {b} * {c} = {b * c} marbles in total.",
            f"Adding the ones already owned gives {a} + {b * c} = {gold}.",
        ]
    else:
        steps = [
            f"First compute {a} * {b} = {a * b}.",
            f"Then adjust by {c} to get {gold}.",
        ]
    return "\n".join(steps + [f"Answer: {gold}"])


def wrong_text(a, b, c, gold, wrong, rng):
    slip = rng.choice(
        [
            f"First compute {a} * {b} = {a * b}.",
            f"Start from the {a} given in the problem.",
            f"Combine {b} and {c} to get {b + c}.",
        ]
    )
    return "\n".join(
        [
            slip,
            f"Continuing from there the total becomes {wrong}.",
            f"Answer: {wrong}",
        ]
    )


def unsimplified_text(gold, rng):
    # Final step evaluates to the gold answer but is left as an expression,
    # so plain answer extraction grades it wrong.
    for _ in range(100):
        a = rng.randint(2, 12)
        if gold % a == 0 and gold // a >= 2 and gold // a != gold:
            b = gold // a
            return "\n".join(
                [
                    "Work through the quantities step by step.",
                    f"The pieces combine into {a} groups of {b}.",
                    f"Answer: {a} * {b}",
                ]
            )
    b = gold - 1
    return "\n".join(
        [
            "Work through the quantities step by step.",
            f"The total splits into 1 and {b}.",
            f"Answer: 1 + {b}",
        ]
    )


def make_corpus(rng):
    problems = []
    solutions = []
    for i in range(50):
        template, gold_fn = TEMPLATES[i % len(TEMPLATES)]
        name = NAMES[i % len(NAMES)]
        a = rng.randint(3, 30)
        b = rng.randint(2, 12)
        c = rng.randint(1, min(20, a * b - 1))
        gold = gold_fn(a, b, c)
        assert gold > 0
        question = template.format(name=name, a=a, b=b, c=c)
        pid = f"p{i + 1:03d}"
        problems.append(
            {
                "id": pid,
                "question": question,
                "gold_answer": str(gold),
                "answer_format": "numeric",
                "dataset": "fixture-mwp",
            }
        )
        for model in MODELS:
            solutions.append(
                {
                    "problem_id": pid,
                    "model_id": model,
                    "sample_index": 0,
                    "text": correct_text(a, b, c, gold, i % len(TEMPLATES)),
                }
            )
            wrong = gold + rng.choice([1, 2, 3, 7, 10, 12])
            solutions.append(
                {
                    "problem_id": pid,
                    "model_id": model,
                    "sample_index": 1,
                    "text": wrong_text(a, b, c, gold, wrong, rng),
                }
            )

    # 40 unsimplified-but-correct samples: every model on ten problems each.
    pairs = [(f"p{p + 1:03d}", m) for p in range(10) for m in MODELS] + [
        (f"p{p + 1:03d}", m) for p in range(20, 30) for m in MODELS
    ]
    assert len(pairs) == 80
    for pid, model in pairs[:40]:
        gold = next(int(p["gold_answer"]) for p in problems if p["id"] == pid)
        solutions.append(
            {
                "problem_id": pid,
                "model_id": model,
                "sample_index": 2,
                "text": unsimplified_text(gold, rng),
            }
        )
    return problems, solutions


ANALYZER_FIXTURES = [
    {
        "name": "two-reason",
        "raw": (
            "The solution misreads the number of bags in the problem statement.\n"
            "It then multiplies by the wrong count, so every later step is off.\n"
            "1. Misread a context value from the problem statement.\n"
            "2. Arithmetic slip in the final multiplication."
        ),
        "expect": {
            "explanation": (
                "The solution misreads the number of bags in the problem statement.\n"
                "It then multiplies by the wrong count, so every later step is off."
            ),
            "reasons": [
                "Misread a context value from the problem statement.",
                "Arithmetic slip in the final multiplication.",
            ],
            "is_right": False,
        },
        "warnings": 0,
    },
    {
        "name": "right-marker",
        "raw": (
            "Each step was checked against the problem statement.\n"
            "The final value matches the standard answer.\n"
            "Solution is right."
        ),
        "expect": {
            "explanation": (
                "Each step was checked against the problem statement.\n"
                "The final value matches the standard answer."
            ),
            "reasons": [],
            "is_right": True,
        },
        "warnings": 0,
    },
    {
        "name": "five-reasons-soft-warning",
        "raw": (
            "The solution goes wrong in several independent places.\n"
            "1. Misread the starting amount.\n"
            "2. Dropped a unit conversion.\n"
            "3. Used addition where subtraction was needed.\n"
            "4. Skipped the final comparison step.\n"
            "5. Copied an intermediate result incorrectly."
        ),
        "expect": {
            "explanation": "The solution goes wrong in several independent places.",
            "reasons": [
                "Misread the starting amount.",
                "Dropped a unit conversion.",
                "Used addition where subtraction was needed.",
                "Skipped the final comparison step.",
                "Copied an intermediate result incorrectly.",
            ],
            "is_right": False,
        },
        "warnings": 1,
    },
    {
        "name": "long-reason-soft-warning",
        "raw": (
            "The error is a single confused step in the middle of the solution.\n"
            "1. The solution applies the percentage increase to the wrong base "
            "quantity and then carries that incorrect intermediate value through "
            "every remaining arithmetic step of the answer."
        ),
        "expect": {
            "explanation": (
                "The error is a single confused step in the middle of the solution."
            ),
            "reasons": [
                "The solution applies the percentage increase to the wrong base "
                "quantity and then carries that incorrect intermediate value through "
                "every remaining arithmetic step of the answer."
            ],
            "is_right": False,
        },
        "warnings": 1,
    },
    {
        "name": "inline-list-then-trailing-list",
        "raw": (
            "The plan was sound:\n"
            "1. compute the subtotal\n"
            "2. subtract the spent amount\n"
            "but step two used the wrong operand.\n"
            "1. Used the price instead of the quantity when subtracting.\n"
            "2. Final subtraction performed in the wrong order."
        ),
        "expect": {
            "explanation": (
                "The plan was sound:\n"
                "1. compute the subtotal\n"
                "2. subtract the spent amount\n"
                "but step two used the wrong operand."
            ),
            "reasons": [
                "Used the price instead of the quantity when subtracting.",
                "Final subtraction performed in the wrong order.",
            ],
            "is_right": False,
        },
        "warnings": 0,
    },
    {
        "name": "no-list-no-marker",
        "raw": "This response rambles about the problem without any structure.",
        "expect_error": True,
    },
]


def make_questions():
    return [
        {
            "id": "q1",
            "question": (
                "Rosa has 14 stickers and buys 3 packs with 9 stickers each. "
                "How many stickers does Rosa have now?"
            ),
        },
        {
            "id": "q2",
            "question": (
                "A florist bundles 8 bouquets of 12 flowers and discards 5 "
                "wilted flowers. How many flowers are sold?"
            ),
        },
        {
            "id": "q3",
            "question": (
                "Dev saves 6 dollars each week. After 9 weeks Dev spends 17 "
                "dollars. How many dollars are left?"
            ),
            "knowledge_route": "Arithmetic > Multiplication > Word problems",
        },
        {
            "id": "q4",
            "question": (
                "A library shelves 24 books per cart across 7 carts and removes "
                "30 damaged books. How many books remain shelved?"
            ),
        },
    ]


def make_predictions():
    codes = ["CA", "CO", "UC", "CV", "HA", "OP", "FC", "MS", "CS"]
    items = [
        {"item_id": "it-unanimous", "predictions": ["CV"] * 10, "gold": "CV"},
        {"item_id": "it-split", "predictions": ["CA"] * 5 + ["OP"] * 5, "gold": "CA"},
        {"item_id": "it-uniform", "predictions": list(codes) + ["CA"], "gold": "UC"},
        {"item_id": "it-majority", "predictions": ["MS"] * 7 + ["CS"] * 3, "gold": "MS"},
    ]
    return items


OFFLINE_CONFIG = {
    "seed": 7,
    "offline": True,
    "dataset_kind": "gsm8k",
    "problems_path": "problems.jsonl",
    "solutions_path": "solutions.jsonl",
    "prompt_dir": "../../assets/prompts",
    "embedding_dim": 48,
    "audit_fraction": 0.1,
    "generation": {"samples_per_problem": 10},
    "k_selection": {
        "k_min": 2,
        "k_max": 10,
        "gap_references": 12,
        "n_init": 5,
        "stability_runs": 10,
        "stability_quorum": 6,
    },
    "eap": {"theta": 0.3, "max_summaries": 5, "knowledge_embedder": "tfidf"},
}


def write_jsonl(path, records):
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def main():
    rng = random.Random(20260814)
    problems, solutions = make_corpus(rng)
    write_jsonl(HERE / "problems.jsonl", problems)
    write_jsonl(HERE / "solutions.jsonl", solutions)
    write_jsonl(HERE / "analyzer_outputs.jsonl", ANALYZER_FIXTURES)
    write_jsonl(HERE / "questions.jsonl", make_questions())
    write_jsonl(HERE / "predictions.jsonl", make_predictions())
    (HERE / "static_verdict_cv.txt").write_text("Classification: Context Value Errors (CV).\n")
    (HERE / "static_verdict_uc.txt").write_text("Classification: Unit Conversion Errors (UC).\n")
    (HERE / "offline_config.json").write_text(
        json.dumps(OFFLINE_CONFIG, indent=2, sort_keys=True) + "\n"
    )
    n_wrong = sum(1 for s in solutions if s["sample_index"] == 1)
    n_unsimplified = sum(1 for s in solutions if s["sample_index"] == 2)
    print(f"problems: {len(problems)}")
    print(f"solutions: {len(solutions)} (wrong: {n_wrong}, unsimplified: {n_unsimplified})")


if __name__ == "__main__":
    main()
