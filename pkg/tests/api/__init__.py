"""
API tests package.
"""
