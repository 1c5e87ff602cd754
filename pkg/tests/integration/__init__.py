"""Integration tests: multi-stage cgen CLI pipelines on tiny budgets."""
