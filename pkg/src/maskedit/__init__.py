"""Mask-guided portrait editing: per-component appearance embeddings placed
under a target semantic mask, decoded with background fusion, trained with a
paired/unpaired adversarial schedule."""

__version__ = "0.1.0"

from .datamodel import ComponentId, LabelSchema, get_schema, helen_schema, toy_schema

__all__ = [
    "ComponentId",
    "LabelSchema",
    "get_schema",
    "helen_schema",
    "toy_schema",
    "__version__",
]
