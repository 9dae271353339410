"""Cavity probe of a two-mode bosonic Josephson junction."""
