"""
airsubspace tests
"""
