"""Variable-geometry aperiodic tilings by a triangle and a rhombus of any angle."""
