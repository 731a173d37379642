"""Black-box REST API test refinement driven by error-message feedback."""

__version__ = "0.1.0"
