"""Joint set-membership learning and robust control of a scalar plant."""
