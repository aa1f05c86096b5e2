#pragma once

namespace everett {

// Central numeric tolerance record. Every check in the library reads its
// threshold from one of these knobs; property tests get a single place to
// tighten or relax them.
struct Tolerances {
    double hermitian = 1e-12;      // ||A - A^dag||_max
    double unitary = 1e-10;        // ||A^dag A - 1||_max
    double projector = 1e-10;      // ||A^2 - A||_max
    double state_norm = 1e-12;     // | ||psi||^2 - 1 |
    double weight_sum = 1e-10;     // | sum of branch weights - 1 |
    double weight_range = 1e-12;   // weights allowed in [-eps, 1+eps]
    double cross_path = 1e-10;     // formula path vs operator/oracle path
    double equivalence = 1e-12;    // mixture-vs-spatial weight agreement
    double invariance = 1e-12;     // unchanged-operator checks a(t)=a etc.
    double locality_zero = 1e-14;  // forbidden joint-weight blocks
    double cluster = 1e-9;         // eigenvalue clustering in extraction
    double residual = 1e-9;        // extraction reassembly residual
    double spectrum = 1e-8;        // eigenvalue multiset comparisons

    static const Tolerances& defaults();

    // Tightened profile for the CLI's --tolerance-profile strict.
    static Tolerances strict();
};

}  // namespace everett
