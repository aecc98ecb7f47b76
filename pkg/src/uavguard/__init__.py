"""Desk-scale testbed: DDPG+PER guidance with a potential-field overlay in a
2D LiDAR arena, gradient-sign attacks on the depth input, Shapley-value
explanations of the policy, and attribution-stream attack detectors."""

__version__ = "0.1.0"
