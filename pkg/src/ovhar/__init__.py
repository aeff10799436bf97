"""Open-vocabulary activity recognition: regress sensor windows onto sentence
embeddings, decode by cosine lookup over a class embedding table."""

__version__ = "0.1.0"
