"""Shipped parameter presets."""
