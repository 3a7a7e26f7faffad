"""Tests for B-spline bases and design assembly."""
