"""
Test Suite
---------

One module per package component. Shared fixtures live in conftest.py.

    pytest -m "not slow"    # fast suite
    pytest                  # including long statistical checks
"""
