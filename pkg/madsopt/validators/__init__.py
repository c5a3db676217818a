# Validation and defaulting for problems and parameters
