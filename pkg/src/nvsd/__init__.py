"""Nonparametric forward stagewise variable selection with DCOL roughening."""

__version__ = "0.1.0"
