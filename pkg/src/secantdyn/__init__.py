"""Secant-method dynamics on the real plane"""
__version__ = "0.1.0"
