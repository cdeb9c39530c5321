"""Label vocabularies and the short explanations embedded in questions."""

from __future__ import annotations

from pathlib import Path

# RAF-DB basic expressions, in the order the label files number them (1..7).
RAFDB_CLASSES = ("surprise", "fear", "disgust", "happiness", "sadness", "anger", "neutral")
# AffectNet, indices 0..7 as published.
AFFECTNET_CLASSES = ("neutral", "happiness", "sadness", "surprise", "fear", "disgust", "anger",
                     "contempt")

# EmotioNet's 12 action units: (AU number, name, one-sentence definition).
EMOTIONET_AUS: tuple[tuple[int, str, str], ...] = (
    (1, "Inner Brow Raiser",
     "Inner Brow Raiser is a facial expression that involves the upward movement of the inner "
     "part of the eyebrows."),
    (2, "Outer Brow Raiser",
     "Outer Brow Raiser is a facial expression that involves the upward movement of the outer "
     "part of the eyebrows."),
    (4, "Brow Lowerer",
     "Brow Lowerer is a facial expression in which the eyebrows are pulled down and together."),
    (5, "Upper Lid Raiser",
     "Upper Lid Raiser is a facial expression in which the upper eyelid is lifted, widening the eye."),
    (6, "Cheek Raiser",
     "Cheek Raiser is a facial expression in which the cheeks are lifted and the skin around the "
     "eyes is gathered."),
    (9, "Nose Wrinkler",
     "Nose Wrinkler is a facial expression in which the skin along the sides of the nose is "
     "wrinkled upward."),
    (12, "Lip Corner Puller",
     "Lip Corner Puller is a facial expression in which the corners of the lips are pulled up "
     "and back, as in a smile."),
    (17, "Chin Raiser",
     "Chin Raiser is a facial expression in which the chin boss is pushed up, raising the lower lip."),
    (20, "Lip Stretcher",
     "Lip Stretcher is a facial expression in which the lips are pulled horizontally toward the ears."),
    (25, "Lips Part",
     "Lips Part is a facial expression in which the lips are separated and the mouth opens slightly."),
    (26, "Jaw Drop",
     "Jaw Drop is a facial expression in which the jaw is lowered so the mouth falls open."),
    (43, "Eyes Closed",
     "Eyes Closed is a facial expression in which the eyelids are fully shut."),
)
AU_DESCRIPTIONS = {name: desc for _, name, desc in EMOTIONET_AUS}
AU_BY_NUMBER = {num: name for num, name, _ in EMOTIONET_AUS}

# The 40 CelebA / LFWA binary attributes, in the published column order.
CELEBA_ATTRIBUTES: tuple[tuple[str, str], ...] = (
    ("5_o_Clock_Shadow", "5 o'Clock Shadow is a light stubble of facial hair grown since a morning shave."),
    ("Arched_Eyebrows", "Arched Eyebrows curve upward to a clear peak before sloping down."),
    ("Attractive", "Attractive describes a face generally perceived as pleasing to look at."),
    ("Bags_Under_Eyes", "Bags Under Eyes are mild swellings or puffiness beneath the eyes."),
    ("Bald", "Bald means the scalp has little or no hair."),
    ("Bangs", "Bangs are hair cut to fall over the forehead."),
    ("Big_Lips", "Big Lips are noticeably full and large lips."),
    ("Big_Nose", "Big Nose describes a nose that is large relative to the face."),
    ("Black_Hair", "Black Hair is hair of a dark black color."),
    ("Blond_Hair", "Blond Hair is hair of a light golden or yellowish color."),
    ("Blurry", "Blurry means the face in the image is out of focus."),
    ("Brown_Hair", "Brown Hair is hair of a brown color."),
    ("Bushy_Eyebrows", "Bushy Eyebrows are thick and dense eyebrows."),
    ("Chubby", "Chubby describes a plump, rounded face."),
    ("Double_Chin", "Double Chin is a fold of fat beneath the chin."),
    ("Eyeglasses", "Eyeglasses are glasses worn in front of the eyes."),
    ("Goatee", "Goatee is a small beard on the chin, often without side whiskers."),
    ("Gray_Hair", "Gray Hair is hair that has turned gray or silver."),
    ("Heavy_Makeup", "Heavy Makeup is clearly visible cosmetics applied to the face."),
    ("High_Cheekbones", "High Cheekbones are cheekbones set high and prominent on the face."),
    ("Male", "Male describes a person who appears to be a man."),
    ("Mouth_Slightly_Open", "Mouth Slightly Open means the lips are parted a little."),
    ("Mustache", "Mustache is hair grown on the upper lip."),
    ("Narrow_Eyes", "Narrow Eyes are eyes that appear thin or partially closed."),
    ("No_Beard", "No Beard means the chin and cheeks show no beard."),
    ("Oval_Face", "Oval Face is a face longer than it is wide with a rounded jaw."),
    ("Pale_Skin", "Pale Skin is skin of a very light tone."),
    ("Pointy_Nose", "Pointy Nose is a nose with a sharp, narrow tip."),
    ("Receding_Hairline", "Receding Hairline means the hair is thinning back from the forehead."),
    ("Rosy_Cheeks", "Rosy Cheeks are cheeks with a pink or reddish tint."),
    ("Sideburns", "Sideburns are strips of hair grown down the sides of the face in front of the ears."),
    ("Smiling", "Smiling means the mouth corners are turned up in a smile."),
    ("Straight_Hair", "Straight Hair is hair that falls without curls or waves."),
    ("Wavy_Hair", "Wavy Hair is hair with loose, wave-like curls."),
    ("Wearing_Earrings", "Wearing Earrings means earrings are visible on the ears."),
    ("Wearing_Hat", "Wearing Hat means a hat or cap is worn on the head."),
    ("Wearing_Lipstick", "Wearing Lipstick means colored lipstick is applied to the lips."),
    ("Wearing_Necklace", "Wearing Necklace means a necklace is visible around the neck."),
    ("Wearing_Necktie", "Wearing Necktie means a necktie is worn at the collar."),
    ("Young", "Young describes a person who appears to be young."),
)
CELEBA_DESCRIPTIONS = dict(CELEBA_ATTRIBUTES)


def attribute_display(name: str) -> str:
    """'Bags_Under_Eyes' -> 'Bags Under Eyes'."""
    return name.replace("_", " ")


def canonical_celeba(name: str) -> str | None:
    key = name.strip().replace(" ", "_").casefold()
    for attr, _ in CELEBA_ATTRIBUTES:
        if attr.casefold() == key:
            return attr
    return None


# Zero-shot features: category -> noun used in "<value> <noun>" phrases.
ZERO_SHOT_NOUNS = {
    "eyelid_type": "eyelids",
    "eye_shape": "eyes",
    "nose_shape": "nose",
    "lip_shape": "lips",
}

ZERO_SHOT_QUESTION_FOCUS = {
    "eyelid_type": "the eyelids",
    "eye_shape": "the shape of the eyes",
    "nose_shape": "the shape of the nose",
    "lip_shape": "the shape of the lips",
}

DEFAULT_FEATURE_DESCRIPTIONS: dict[str, dict[str, str]] = {
    "eyelid_type": {
        "single": "Single eyelids have no visible crease between the lid and the brow, so the "
                  "upper lid looks smooth and flat.",
        "double": "Double eyelids have a visible crease that folds the upper lid into two layers "
                  "when the eye is open.",
    },
    "eye_shape": {
        "phoenix": "Phoenix eyes are long and narrow, with outer corners that sweep upward.",
        "almond": "Almond eyes are oval, widest in the middle and tapering to slightly pointed "
                  "corners.",
        "peach blossom": "Peach blossom eyes are softly curved with slightly downturned outer "
                         "corners and a moist, gentle look.",
    },
    "nose_shape": {
        "upturned": "An upturned nose has a tip that points slightly upward, leaving the nostrils "
                    "visible from the front.",
        "aquiline": "An aquiline nose has a prominent bridge with a convex curve, like an eagle's "
                    "beak.",
        "low bridge": "A low bridge nose has a flat bridge that sits close to the face between "
                      "the eyes.",
    },
    "lip_shape": {
        "cherry": "Cherry lips are small, full and rounded, with a rosy color like a cherry.",
        "thick": "Thick lips are full and voluminous, with noticeable height in both the upper "
                 "and lower lip.",
    },
}


def load_feature_descriptions(path: str | Path | None) -> dict[str, dict[str, str]]:
    """Defaults overlaid with a TOML file of ``[category] value = "description"`` tables."""
    merged = {cat: dict(vals) for cat, vals in DEFAULT_FEATURE_DESCRIPTIONS.items()}
    if path is None:
        return merged
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as f:
        data = tomllib.load(f)
    for cat, vals in data.items():
        if cat not in merged:
            raise ValueError(f"unknown zero-shot category {cat!r} in {path}")
        for value, desc in vals.items():
            if value not in merged[cat]:
                raise ValueError(f"unknown value {value!r} for {cat} in {path}")
            merged[cat][value] = str(desc)
    return merged
