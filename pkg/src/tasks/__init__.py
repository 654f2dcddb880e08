"""
This package contains the task adapters built on the active pipeline.
Including step-wise multi-hop question answering and false-premise question rectification.
"""
