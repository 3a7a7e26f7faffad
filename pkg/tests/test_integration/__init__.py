"""Integration tests for MCP tools and server."""
