"""slidecast: documents in, narrated slide videos out, with a built-in
quiz + subjective-scoring evaluation harness."""

__version__ = "0.1.0"
