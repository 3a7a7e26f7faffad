"""Tests for the packaged JSON Schemas."""
