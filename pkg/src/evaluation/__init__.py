"""
This package contains the gold-annotation data model and the detection and mitigation metrics.
Including precision/recall, PR curves and their area, probability bins and propagation counts.
"""
