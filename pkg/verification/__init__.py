"""Closed-form solutions, error measures and the homogeneous material-point driver."""
