"""Striped one-dimensional foliations on surfaces: leaf spaces and local triviality."""
