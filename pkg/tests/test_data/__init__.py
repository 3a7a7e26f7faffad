"""Tests for data ingestion and validation."""
