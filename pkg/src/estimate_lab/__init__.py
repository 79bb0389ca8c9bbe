"""Numerical verification lab for interior gradient bounds of degenerate
parabolic equations of the form u_t = a(x,t,u) * laplacian(F(u)) + H."""

__version__ = "0.1.0"
