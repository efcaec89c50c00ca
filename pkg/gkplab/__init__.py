"""Finite-energy GKP qubit graph-state simulation"""
__version__ = '2026.10.1'
