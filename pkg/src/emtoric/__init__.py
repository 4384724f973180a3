"""Weighted Futaki invariants and ambitoric Einstein-Maxwell solutions on labelled polygons."""
