"""
Unit tests for utils module.
"""

import logging
from unittest.mock import patch

import pytest

from hakimkit.config import THREADS_ENV_VAR
from hakimkit.core import utils


def test_resolve_thread_count_explicit(monkeypatch):
    """Test that an explicit request wins over the environment."""
    monkeypatch.setenv(THREADS_ENV_VAR, "7")
    assert utils.resolve_thread_count(3) == 3
    with pytest.raises(ValueError):
        utils.resolve_thread_count(0)


def test_resolve_thread_count_env(monkeypatch):
    """Test the environment override."""
    monkeypatch.setenv(THREADS_ENV_VAR, "5")
    assert utils.resolve_thread_count() == 5


@patch("hakimkit.core.utils.psutil.cpu_count")
def test_resolve_thread_count_bad_env(mock_cpu_count, monkeypatch, caplog):
    """Test that a malformed override is ignored with a warning."""
    mock_cpu_count.return_value = 6
    monkeypatch.setenv(THREADS_ENV_VAR, "many")
    with caplog.at_level(logging.WARNING):
        assert utils.resolve_thread_count() == 6
    assert THREADS_ENV_VAR in caplog.text


@patch("hakimkit.core.utils.psutil.cpu_count")
def test_resolve_thread_count_cpu(mock_cpu_count, monkeypatch):
    """Test the CPU count fallback, including an unknown count."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    mock_cpu_count.return_value = 12
    assert utils.resolve_thread_count() == 12
    mock_cpu_count.assert_called_with(logical=True)
    mock_cpu_count.return_value = None
    assert utils.resolve_thread_count() == 1


def test_parse_complex():
    """Test 're,im' and bare reals."""
    assert utils.parse_complex("0.5,-1") == complex(0.5, -1)
    assert utils.parse_complex(" 2 ") == 2 + 0j
    for bad in ("", "1,2,3", "a,b"):
        with pytest.raises(ValueError):
            utils.parse_complex(bad)


def test_parse_window():
    """Test square and rectangular windows."""
    assert utils.parse_window("0.1,0:0.15") == (complex(0.1, 0), 0.15, 0.15)
    assert utils.parse_window("0,1:2,0.5") == (1j, 2.0, 0.5)
    with pytest.raises(ValueError):
        utils.parse_window("0.1,0")
    with pytest.raises(ValueError):
        utils.parse_window("0,0:x")


def test_parse_resolution():
    """Test WIDTHxHEIGHT parsing."""
    assert utils.parse_resolution("64x32") == (64, 32)
    assert utils.parse_resolution("8X8") == (8, 8)
    for bad in ("64", "0x4", "axb"):
        with pytest.raises(ValueError):
            utils.parse_resolution(bad)


def test_parse_slice():
    """Test the slice spellings."""
    assert utils.parse_slice("w = u*z") == "direction"
    assert utils.parse_slice("w=w0") == "fixed-w"
    assert utils.parse_slice("Z=z0") == "fixed-z"
    with pytest.raises(ValueError):
        utils.parse_slice("z=w")
