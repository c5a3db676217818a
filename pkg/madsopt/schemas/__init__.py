# Pydantic schemas for the madsopt domain vocabulary
