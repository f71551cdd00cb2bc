"""
Driving signals, propagators, perturbations and built-in time-varying systems
"""
