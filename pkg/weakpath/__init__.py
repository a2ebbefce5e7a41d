"""
weakpath - weak values from path integrals.

Operator, path-integral and semiclassical routes to weak values, coupled
system-probe dynamics, propagator inference, the nested interferometer
analysis and the classical conditional pointer shift.
"""

__version__ = "1.0.0"
