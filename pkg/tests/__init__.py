"""Tests for the canvas_psd package."""
