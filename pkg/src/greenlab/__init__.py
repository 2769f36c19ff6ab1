"""Green functions, pull-backs of currents and equidistribution experiments for
holomorphic endomorphisms of P^k and Henon-type automorphisms."""

__version__ = "0.1.0"

from .poly import (LiftedEndomorphism, RegularAutomorphism, make_henon, make_perturbed_power_map, make_power_map,
                   make_ueda_map, parse_map, parse_polynomial)
from .projective import ProjectivePoint, fs_distance, normalize, point
from .green import green_lift, green_lift_batch, green_potential, henon_green_plus

__all__ = [
    "LiftedEndomorphism", "RegularAutomorphism", "make_henon", "make_perturbed_power_map", "make_power_map",
    "make_ueda_map", "parse_map", "parse_polynomial", "ProjectivePoint", "fs_distance", "normalize", "point",
    "green_lift", "green_lift_batch", "green_potential", "henon_green_plus",
]
