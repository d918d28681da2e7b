"""Storage modules for run artifacts and the run ledger."""
