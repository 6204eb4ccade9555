"""Tests for gapdyn."""
