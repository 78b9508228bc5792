"""Tests for the ldrpy module."""

from ldrpy import __version__, versions


def test_versions():
    """Test ldrpy.versions function."""
    ver = versions()
    assert 'Python-' in ver
    assert f'ldrpy-{__version__}\nnumpy-' in ver
    assert 'scipy-' in ver
    assert '(' not in ver

    ver = versions(sep=', ', dash=' ', verbose=True)
    assert f', ldrpy {__version__}  (' in ver
