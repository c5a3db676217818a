# Shared helpers for madsopt
