"""Desk-scale vision-action self-supervised pretraining for visual navigation."""

__version__ = "0.1.0"
