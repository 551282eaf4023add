"""
Core analysis modules: series engine, maps, Hakim directions, constraint, dynamics.
"""
