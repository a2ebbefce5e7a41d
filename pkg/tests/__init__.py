"""
Test suite for BWB Scanner.
"""