"""MCP tools for PLVC quantile regression."""

# Tool modules are imported in server.py to register them via @mcp.tool() decorators
