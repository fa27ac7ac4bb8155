"""
Unit tests for the application.
""" 