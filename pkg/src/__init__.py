"""
switchstab - stability analysis of randomly switched linear systems
"""

__version__ = "0.1.0"
