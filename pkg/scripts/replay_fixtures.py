#!/usr/bin/env python3
"""Score constructed evaluation fixtures and print both report layouts.

Shows how a 912/1000 expression fixture and a four-category zero-shot fixture
render, without any model in the loop.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from eval_fixtures import expression_fixture, zero_shot_fixture  # noqa: E402
from faceqa.evaluation import emit_report, score  # noqa: E402


def main():
    expr = score(expression_fixture(), {"model": "fixture"})
    print(emit_report(expr, "table2")[0])
    zs = score(zero_shot_fixture({"eyelid_type": 0.593, "eye_shape": 0.539, "nose_shape": 0.653,
                                  "lip_shape": 0.500}), {"model": "fixture"})
    print(emit_report(zs, "table3")[0])


if __name__ == "__main__":
    main()
