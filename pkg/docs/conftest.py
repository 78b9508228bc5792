"""Pytest configuration."""

collect_ignore = ['conf.py']
