"""Quadrotor modelling, identification and geometric tracking control on SE(3)."""

__version__ = "0.1.0"

GRAVITY = 9.81
E3 = (0.0, 0.0, 1.0)
