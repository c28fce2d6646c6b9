"""Truck-and-drone delivery planning."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401


def plan_instance(instance, estimator, params=None, budget=1000, seed=0):
    """Two-opt order, split and local search, then the physics pass."""
    tour = initial_tour(instance, seed)
    found = improve(instance, tour, estimator, budget)
    return finalize_plan(instance, found.plan, params if params is not None else DronePhysicsParams())
