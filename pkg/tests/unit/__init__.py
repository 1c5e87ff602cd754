"""Unit tests, one directory per cgenlab package."""
