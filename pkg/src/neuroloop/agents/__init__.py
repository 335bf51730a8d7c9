"""Closed-loop agents built from chip populations: a navigating robot and a sequence learner."""
