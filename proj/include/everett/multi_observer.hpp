#pragma once

#include <utility>
#include <vector>

#include "everett/spatial.hpp"

namespace everett {

// Injective map from observer-outcome pairs (i,j), i,j = 0..M to verifier
// states 1..(M+1)^2; verifier index 0 is its own ignorance state.
class GIndexMap {
public:
    explicit GIndexMap(int outcome_count);

    int outcomes() const { return outcome_count_; }
    int state_count() const { return (outcome_count_ + 1) * (outcome_count_ + 1) + 1; }

    int index_of(int i, int j) const;            // in 1..(M+1)^2
    std::pair<int, int> outcome_pair(int I) const;  // inverse on the image

private:
    int outcome_count_;
};

// Two observers, each with its own interaction ball (radius a_p around the
// platform point d_p), measure the system; a verifier then measures both
// observers and records the joint outcome.
struct MultiObserverSpec {
    IdealModelSpec ideal;  // shared M, alphas, betas
    SpatialGrid grid_x;
    SpatialGrid grid_z;
    double radius1 = 0.0;
    double radius2 = 0.0;
    Eigen::VectorXd offset1;  // d_1, platform displacement of observer 1
    Eigen::VectorXd offset2;
    BallBoundary boundary = BallBoundary::Closed;
    Eigen::MatrixXcd psi_xs;
    Vector psi_z;
    double tau1 = 1.0, tau2 = 1.0, tau_g = 1.0;

    double kappa(int p) const;
    double kappa_g() const;
    void validate(const Tolerances& tol = Tolerances::defaults()) const;
};

struct JointWeightMatrix {
    Eigen::MatrixXd weights;  // (M+1) x (M+1), entry (i,j)
    double total = 0.0;

    void require_valid(const Tolerances& tol = Tolerances::defaults()) const;
};

struct LocalizationReport {
    JointWeightMatrix weights;
    double max_forbidden = 0.0;  // largest entry in the blocks that must vanish
    double threshold = 0.0;
    bool pass = false;
};

class MultiObserverModel {
public:
    explicit MultiObserverModel(MultiObserverSpec spec);

    const MultiObserverSpec& spec() const { return spec_; }
    int outcomes() const { return spec_.ideal.outcome_count; }
    const GIndexMap& g_index() const { return g_index_; }

    SpacePtr verifier_space() const { return verifier_; }
    SpacePtr observer_space(int p) const;
    ProductSpace full_space() const;   // G * O1 * O2 * S * Z * X
    ProductSpace label_space() const;  // O1 * O2 * S * Z * X

    // f''_p: 1 when xi lies inside observer p's displaced interaction ball.
    int in_range(int p, Eigen::Index zeta_idx, Eigen::Index xi_idx) const;

    // Joint weights by pure grid sums; no operators built.
    JointWeightMatrix joint_weights() const;

    // Case of disjoint interaction regions: |d1-d2| > a1+a2 (strict). The
    // both-measured block (i,j >= 1) must vanish.
    LocalizationReport check_separated(const Tolerances& tol = Tolerances::defaults()) const;

    // Case of coincident regions: d1 = d2, a1 = a2. Off-diagonal and
    // single-ignorance entries must vanish.
    LocalizationReport check_coincident(const Tolerances& tol = Tolerances::defaults()) const;

    // The (M+1)^2 joint-outcome label operators on label_space(). Dim-capped.
    std::vector<LinOp> g_labels() const;

    // Operator-path machinery for validation. All dim-capped.
    LinOp observer_unitary(int p) const;      // measurement of the system by observer p
    LinOp verifier_unitary() const;           // measurement of both observers
    LinOp total_unitary() const;              // verifier after both observers
    LinOp verifier_pointer() const;           // diag(gamma_I) on the verifier space
    Ket initial_state() const;
    BranchWeightReport operator_path_weights() const;  // flattened (i,j), row-major

private:
    void require_operator_path(const char* what) const;
    LinOp conjugated_projector(int p, int outcome, int through) const;

    MultiObserverSpec spec_;
    GIndexMap g_index_;
    IdealModel ideal_;
    SpacePtr verifier_;
    SpacePtr observer1_;
    SpacePtr observer2_;
    SpacePtr z_space_;
    SpacePtr x_space_;
};

}  // namespace everett
