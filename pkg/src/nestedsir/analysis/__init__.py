"""Estimators and checks on sampled networks and epidemics."""
