"""
This package contains the command-line entry point and the run configuration file.
"""
