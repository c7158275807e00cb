"""Recursive Gilbert-Varshamov style constant-composition codes."""
