"""Circuit substrate: gate table, statevector simulator, genomes and operators."""
