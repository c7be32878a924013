"""Командная строка slconvex."""
