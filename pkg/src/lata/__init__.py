"""Local engine for aligning and annotating parallel texts.

Pipeline: capture document metadata, import paragraph-split documents,
align paragraphs, segment and align sentences (rule-based or via a
configured LLM provider with validation and fallback), post-edit through
the HTTP service, and export a zipped stand-off XML bundle that re-imports
losslessly.
"""

__version__ = "0.1.0"

from .errors import LataError
from .model import (
    AlignmentLink,
    Document,
    DocumentMeta,
    Paragraph,
    Project,
    PromptTemplate,
    Sentence,
    TechniqueDef,
    validate_project,
)
from .store import Store, canonical_json

__all__ = [
    "AlignmentLink",
    "Document",
    "DocumentMeta",
    "LataError",
    "Paragraph",
    "Project",
    "PromptTemplate",
    "Sentence",
    "Store",
    "TechniqueDef",
    "__version__",
    "canonical_json",
    "validate_project",
]
