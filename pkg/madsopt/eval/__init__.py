# Evaluation management: cache, queue, budget and the evaluation engine
