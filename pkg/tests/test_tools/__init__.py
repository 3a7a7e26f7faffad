"""Tests for the MCP tools."""
