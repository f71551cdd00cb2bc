"""
Exponent estimators and stability experiments
"""
