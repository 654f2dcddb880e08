"""
This package contains the hallucination detection steps.
Including concept identification, uncertainty scoring and sequential validation.
"""
