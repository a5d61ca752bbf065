"""Helper routines for the miss fixture."""


def describe(value):
    return "value=" + str(value)
