"""Three-stage complex scene generation: composition, painting, retouching."""

__version__ = "0.1.0"
