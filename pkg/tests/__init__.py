"""
Test suite for crow-entangle.
"""
