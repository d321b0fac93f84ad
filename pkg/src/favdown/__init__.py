"""Favorite downcrossing sites of the simple symmetric random walk.

Simulation of crossing local times, the branching-process (Ray-Knight)
description of downcrossing profiles, and exact oracles for the hitting
quantities and tie probabilities built on it.
"""
__version__ = "0.1.0"
