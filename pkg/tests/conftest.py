"""tests/conftest.py
Puts the repository root on sys.path and selects the quick configuration
(small trial counts) before any femtonet module is imported.
"""
import os
import sys

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

os.environ.setdefault('FEMTONET_ENV', 'quick')
os.environ.setdefault('FEMTONET_LOG_LEVEL', 'WARNING')
