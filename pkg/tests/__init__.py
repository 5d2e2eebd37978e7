"""
Test suite for face embedding extraction.
"""