"""Occlusion-aware trajectory planning stack.

Modules:
    geometry    polygon kernel and shadow casting
    scene       world model and derived occlusion / free space
    prediction  worst-case occupancy schedules
    safety      stopping-distance safety layer
    vehicle     linear single-track lateral dynamics
    qp          dense convex QP solver (dual active set)
    mpc         receding-horizon planner with slack-augmented inputs
    tactical    maneuver / target-pose / constraint-treatment decisions
    sim         closed-loop simulator
    scenario    scenario file parsing
    cli         command-line entry points
"""

__version__ = "0.1.0"
