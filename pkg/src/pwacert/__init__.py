"""Certification of PWA closed loops with maxout network controllers via MILP."""
