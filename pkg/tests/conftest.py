# keeps the tests directory importable for the shared generator helpers
