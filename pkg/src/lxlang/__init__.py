"""A small reasoning-oriented language: frontend, IR, evaluator and bounded verifier."""
