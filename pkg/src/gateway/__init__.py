"""
This package contains the uniform interface to text-completion backends that report token probabilities.
Including a live HTTP client and a deterministic scripted backend.
"""
