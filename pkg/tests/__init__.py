"""
Test suite for hakimkit.
"""
