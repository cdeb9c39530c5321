"""Free-form answers paraphrased from the parser rules, with their expected parse.

Built by instantiating phrasing templates over answers; a few entries are
deliberately unanswerable (expected None) so the corpus also checks refusals.
"""

from faceqa.qaforge import format_options
from faceqa.vocab import RAFDB_CLASSES

EXPRESSION_OPTIONS = tuple(zip("ABCDEFG", RAFDB_CLASSES))

_YES_NO_TEMPLATES = (
    "{A}", "{A}.", "{a}", "{U}", "{A}!", "Answer: {A}", "The answer is {a}.", "The answer is: {a}.",
    "Final answer: {A}", "**{A}**", "{A}, the person is wearing glasses.",
    "{A}. The eyebrows are raised.", "I think the answer is {a}.", "My answer: {A}.",
    "Assistant: {A}", "\"{A}\"", "({A})", "{A} - based on the image.", "  {A}\n",
    "Response: {a}", "Based on the image, {a}.", "{A}, definitely.", "answer is {a}",
    "After looking carefully: {A}.", "It's a {a}.",
    "{A}, it is.", "{A}; the mouth is open.", "Answer - {A}", "{A}\n\nThe person is smiling.",
    "Sure. {A}.", "Definitely {a}.", "{a}.", "{U}.", "`{A}`", "[{A}]", "The final answer is {A}.",
    "{A} (high confidence)", "Hmm, {a}.", "Short answer: {A}.", "{A} — clearly visible.",
    "Looking at the eyes, {a}.", "Answer:\n{A}", "answer: {a}", "{A}, because of the wrinkles.",
    "The answer: {A}", "In my view, {a}.", "{A}.\nExplanation: visible in the image.",
    "I'd say {a}.",
)

_YES_NO_UNANSWERABLE = ("I cannot tell.", "Maybe.", "It is hard to say from this photo.",
                        "The image is too blurry to decide.")

_LETTER_TEMPLATES = (
    "{L}", "{L}.", "({L})", "{L})", "{L}. {T}", "{L}) {T}", "{L}: {T}", "Option {L}",
    "option {L}.", "The answer is {L}.", "Answer: {L}", "Answer is ({L})", "The answer would be {L}.",
    "I would choose {L}.", "I pick {L}", "Choice {L}", "The correct letter is {L}.",
    "The expression is {T}.", "{T}", "{Tc}.", "This person looks like {T}.",
    "Letter {L}", "**{L}**", "Based on the face, the answer is {L} ({T}).",
)

_LETTER_UNANSWERABLE = ("A or B", "I cannot tell which expression this is.",
                        "Either happiness or surprise.", "None of these.")


def yes_no_corpus() -> list[tuple[str, bool | None]]:
    out = []
    for template in _YES_NO_TEMPLATES:
        for word, value in (("yes", True), ("no", False)):
            out.append((template.format(A=word.capitalize(), a=word, U=word.upper()), value))
    out += [(text, None) for text in _YES_NO_UNANSWERABLE]
    return out


def letter_corpus() -> list[tuple[str, str | None]]:
    out = []
    for k, template in enumerate(_LETTER_TEMPLATES):
        for j in range(4):
            letter, text = EXPRESSION_OPTIONS[(k + 2 * j) % len(EXPRESSION_OPTIONS)]
            out.append((template.format(L=letter, T=text, Tc=text.capitalize()), letter))
    out += [(text, None) for text in _LETTER_UNANSWERABLE]
    return out


def corpus_size() -> int:
    return len(yes_no_corpus()) + len(letter_corpus())


EXPRESSION_QUESTION_OPTIONS_TEXT = format_options(EXPRESSION_OPTIONS)
