"""Utility helpers for ANCL."""
