"""
Tests for great-circle-contact
"""
