"""Environments, closed-loop rollouts and verification oracles."""
