"""PLVC Quantile MCP Server - quantile regression for longitudinal data."""

import logging

from fastmcp import FastMCP

from plvc_quantile.config import settings

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

mcp = FastMCP(
    "plvc-quantile",
    instructions="""
    PLVC Quantile MCP Server for longitudinal quantile regression.

    This server provides tools for:
    - Validating longitudinal CSV datasets (subject, time, y, covariates)
    - Fitting partially linear varying coefficient quantile models by B-splines
    - Selecting the number of internal knots by the Schwarz criterion
    - Rank score and Wald tests of the constant coefficients
    - Rank score tests and L1 shrinkage for constancy of varying coefficients
    - Monte Carlo level, power and MSE studies on simulated designs

    Data paths refer to files readable by the server process. Every call is
    recorded in the run ledger.

    Quantile levels must lie strictly inside (0, 1). Tests report chi-squared
    p-values; treat results at extreme quantiles with small samples with care.
    """,
)

# Import tools to register them with FastMCP via @mcp.tool() decorators
# These imports must happen after mcp is defined
from plvc_quantile.tools import (  # noqa: E402
    estimation,  # noqa: F401
    inference,  # noqa: F401
    simulation,  # noqa: F401
)


def main() -> None:
    """Run the MCP server over stdio."""
    if settings.mcp_transport != "stdio":
        logging.getLogger(__name__).warning(
            f"Transport '{settings.mcp_transport}' is not supported; using stdio"
        )
    mcp.run()


if __name__ == "__main__":
    main()
