#!/usr/bin/env python3
"""Ponto de entrada da linha de comando do simulador."""

from app.cli import app

if __name__ == "__main__":
    app()
