# Benchmark problems, run records, data profiles and the benchmark runner
