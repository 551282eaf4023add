"""
hakimkit - Characteristic directions and basins of maps tangent to the identity

Exact truncated power series, Hakim index analysis, the dz^dw/(zw) volume-form
constraint for axes-fixing germs, and a numerical orbit/basin explorer.
"""

__version__ = "0.1.0"
