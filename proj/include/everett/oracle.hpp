#pragma once

#include <string>
#include <vector>

#include "everett/ideal.hpp"
#include "everett/multi_observer.hpp"
#include "everett/spatial.hpp"

namespace everett {

// Brute-force verification results: evolve the full initial state vector and
// project onto observer-outcome subspaces. Probabilities are indexed by
// outcome (0..M), or row-major over (i,j) pairs for the two-observer run.
struct OracleResult {
    std::vector<double> probabilities;
    std::string method = "state-vector projection";

    double sum() const;
};

// The oracle shares only the hilbert primitives with the code under test: it
// assembles every Hamiltonian itself from the spec and exponentiates it
// spectrally, never through the models' closed-form evolution operators or
// weight formulas.
OracleResult oracle_ideal(const IdealModelSpec& spec);
OracleResult oracle_spatial(const SpatialModelSpec& spec);    // dim-capped
OracleResult oracle_multi(const MultiObserverSpec& spec);     // dim-capped

}  // namespace everett
