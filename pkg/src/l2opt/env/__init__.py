"""Communication system models used as optimization targets."""
