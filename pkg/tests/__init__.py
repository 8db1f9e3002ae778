"""Test suite for AI Analysis tools."""
