"""
This package contains the active detect-and-mitigate generation loop.
Including sentence segmentation, the shared per-sentence step and the article runner.
"""
