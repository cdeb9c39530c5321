"""Face-perception QA data pipeline and evaluation harness."""

from .schema import (
    AttributeSchema,
    DEFAULT_ATTRIBUTE_SCHEMA,
    FaceImageRef,
    GoldLabel,
    PersonAnnotation,
    QAPair,
    read_records,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeSchema",
    "DEFAULT_ATTRIBUTE_SCHEMA",
    "FaceImageRef",
    "GoldLabel",
    "PersonAnnotation",
    "QAPair",
    "read_records",
    "write_records",
]
