"""CLI module for hamgp."""
