"""Named initial conditions and velocity profiles usable from config files."""
import numpy as np


def gaussian_1d(x):
    return np.exp(-0.5 * x**2)


def gaussian_2d(X, Y):
    return np.exp(-(X**2 + Y**2))


def orbit_vx(t):
    return 0.5 * np.cos(t)


def orbit_vy(t):
    return -0.4 * np.sin(t)


def zero(t):
    return 0.0 * np.asarray(t, dtype=float)


INITIAL_1D = {"gaussian": gaussian_1d}
INITIAL_2D = {"gaussian": gaussian_2d}
VELOCITY = {"orbit_vx": orbit_vx, "orbit_vy": orbit_vy, "zero": zero}
