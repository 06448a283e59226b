"""Computational checks for intrinsically Lipschitz and Hölder sections."""
