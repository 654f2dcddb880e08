"""
This package contains the mitigation step repairing sentences flagged as hallucinated.
"""
