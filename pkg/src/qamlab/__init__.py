"""Desk-scale simulation of quantum Arthur-Merlin games, their reductions and metric lemmas."""

__version__ = "0.1.0"
