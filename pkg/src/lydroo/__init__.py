"""Lyapunov-guided online computation offloading for multi-user MEC networks."""
