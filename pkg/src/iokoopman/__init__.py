"""Input-output Koopman identification with PSO-optimized RBF dictionaries."""
