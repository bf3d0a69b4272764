"""Isogeometric Kirchhoff-Love membranes and shells with surface viscoelasticity."""
