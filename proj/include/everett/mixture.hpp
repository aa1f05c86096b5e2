#pragma once

#include <utility>
#include <vector>

#include "everett/spatial.hpp"

namespace everett {

// A classical ensemble of displaced system wavefunctions measured by an
// observer pinned at the origin. Member zeta carries the base wavefunction
// shifted by zeta with weight member_prob(zeta).
struct MixtureSpec {
    IdealModelSpec ideal;
    SpatialGrid grid_x;
    SpatialGrid grid_z;  // indexes the mixture members
    double radius = 0.0;
    BallBoundary boundary = BallBoundary::Closed;
    Eigen::MatrixXcd psi_xs;      // unshifted wavefunction, as in SpatialModelSpec
    Eigen::VectorXd member_prob;  // p over grid_z points, >= 0, sums to 1

    void validate(const Tolerances& tol = Tolerances::defaults()) const;
};

struct DensityOp {
    ProductSpace space;
    Matrix mat;

    double trace() const { return mat.trace().real(); }
    // Hermitian, unit trace, positive semidefinite.
    void require_valid(const Tolerances& tol = Tolerances::defaults()) const;
};

struct EquivalenceReport {
    BranchWeightReport spatial;
    BranchWeightReport mixture;
    std::vector<double> abs_difference;  // per outcome 0..M
    double max_abs_difference = 0.0;
    bool pass = false;
};

class MixtureModel {
public:
    explicit MixtureModel(MixtureSpec spec);

    const MixtureSpec& spec() const { return spec_; }
    const IdealModel& ideal() const { return ideal_; }
    SpacePtr x_space() const { return x_space_; }
    ProductSpace full_space() const;  // O * S * X (observer position dropped)

    // g(xi) = 1 inside the radius-a ball around the origin.
    int origin_indicator(Eigen::Index xi_idx) const;
    LinOp origin_projector() const;

    // The base wavefunction displaced by the zeta-th member's offset,
    // zero-filled where the source leaves the grid.
    Eigen::MatrixXcd member_wavefunction(Eigen::Index zeta_idx) const;

    // Weights of a single mixture member.
    BranchWeightReport member_weights(Eigen::Index zeta_idx) const;

    // p-weighted average over members.
    BranchWeightReport weights() const;

    // sum_zeta p(zeta) |member><member| on O * S * X. Dim-capped.
    DensityOp initial_density() const;

    // tr(rho * label_k) for every outcome; validation path only. Dim-capped.
    BranchWeightReport density_path_weights() const;

private:
    // Index displacement of member zeta on grid_x, in lattice steps.
    std::vector<int> member_shift(Eigen::Index zeta_idx) const;
    Ket member_state(Eigen::Index zeta_idx) const;

    MixtureSpec spec_;
    IdealModel ideal_;
    SpacePtr x_space_;
};

// Rebuilds the paired mixture (p = |psi_z|^2) and compares all M+1 weights
// against the spatial model's. Throws when a member's shifted support clips
// the grid, naming the offending member.
EquivalenceReport verify_mixture_equivalence(const SpatialModelSpec& spatial_spec,
                                             const Tolerances& tol = Tolerances::defaults());

}  // namespace everett
