"""Tests for the PLVC quantile regression package."""
