"""Exact functional-graph statistics of polynomial maps over prime fields."""
