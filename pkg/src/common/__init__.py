"""
This package contains the common definitions / structures / enums / etc. shared by the halo pipeline.
"""
