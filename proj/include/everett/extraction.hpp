#pragma once

#include <cstdint>
#include <vector>

#include "everett/hilbert.hpp"

namespace everett {

// Input for branch extraction: a Hermitian operator on a product space whose
// first factor is the observer; the remaining factors together form the
// labeled side. The reference ket is the observer's ready state.
struct ExtractionInput {
    LinOp op;
    Ket ref_ket;              // on the first factor of op's space
    int expected_branch_count = 0;

    void validate(const Tolerances& tol = Tolerances::defaults()) const;
    Eigen::Index observer_dim() const;
    Eigen::Index label_dim() const;
};

struct ExtractedBranch {
    double beta = 0.0;
    Matrix observer_op;  // on the observer factor
    Matrix projector;    // on the label side
};

// Branches sorted by beta ascending. The projectors form a complete
// orthogonal family; residual is the max-norm defect of the reassembled sum.
struct ExtractedDecomposition {
    std::vector<ExtractedBranch> branches;
    double residual = 0.0;
};

// Constructive branch extraction:
//   1. reduce to the label side through the reference ket,
//   2. eigendecompose and cluster the eigenvalues,
//   3. projectors from the cluster eigenspaces,
//   4. observer operators by least squares against each projector's range,
//   5. verify the full decomposition contract.
// Throws "branch count mismatch" when clustering does not produce the
// expected number of branches, and "not of product-decomposable form" when
// the reassembly residual exceeds tolerance.
ExtractedDecomposition extract_decomposition(const ExtractionInput& input,
                                             const Tolerances& tol = Tolerances::defaults());

struct UniquenessReport {
    int trials = 0;
    bool pass = false;
    double worst_beta_deviation = 0.0;
    double worst_projector_deviation = 0.0;
};

// Re-extracts from adversarially rebuilt copies of the decomposition
// (branch order permuted, eigenspace bases remixed) and checks that the
// (beta, projector) family always comes back the same up to permutation.
UniquenessReport verify_uniqueness(const ExtractionInput& input, int trials,
                                   std::uint64_t seed,
                                   const Tolerances& tol = Tolerances::defaults());

}  // namespace everett
