#pragma once

#include <span>
#include <utility>
#include <vector>

#include "everett/ideal.hpp"

namespace everett {

// Hard cap on the total dimension of any dense-operator construction.
// Formula-path weights have no such limit.
inline constexpr Eigen::Index kOperatorPathDimCap = 4096;

// Whether a ball of radius `a` includes its boundary sphere. The interaction
// indicator is defined on the closed ball by default; the open variant is
// kept as a config knob.
enum class BallBoundary { Closed, Open };

bool within_ball(double dist, double radius, BallBoundary boundary);

// A uniform cubic lattice standing in for a continuous coordinate: n points
// per axis in d dimensions, axis-major (row-major) flat indexing.
class SpatialGrid {
public:
    SpatialGrid() : SpatialGrid(1, 1, 1.0) {}
    SpatialGrid(int dimension, int points_per_axis, double spacing,
                std::vector<double> origin = {});

    int dimension() const { return dimension_; }
    int points_per_axis() const { return points_per_axis_; }
    double spacing() const { return spacing_; }
    const std::vector<double>& origin() const { return origin_; }

    Eigen::Index point_count() const { return point_count_; }
    Eigen::VectorXd point(Eigen::Index k) const;

    std::vector<int> multi_index(Eigen::Index k) const;
    Eigen::Index flat_index(std::span<const int> multi) const;
    bool contains(std::span<const int> multi) const;

    // Largest distance between any two lattice points.
    double diameter() const;

    // Basis labels "(x,y,z)" for the induced Hilbert space.
    std::vector<std::string> point_labels() const;

private:
    int dimension_;
    int points_per_axis_;
    double spacing_;
    std::vector<double> origin_;
    Eigen::Index point_count_;
};

// 1 when zeta and xi interact (|zeta - xi| inside the radius-a ball), else 0.
int range_indicator(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi, double radius,
                    BallBoundary boundary = BallBoundary::Closed);

// Finite-range measurement with translational degrees of freedom for both the
// system (grid_x) and the observer (grid_z).
struct SpatialModelSpec {
    IdealModelSpec ideal;
    SpatialGrid grid_x;
    SpatialGrid grid_z;
    double radius = 0.0;  // interaction radius a >= 0
    BallBoundary boundary = BallBoundary::Closed;
    Eigen::MatrixXcd psi_xs;  // row i-1 = amplitudes of outcome i over grid_x
    Vector psi_z;             // observer position amplitudes over grid_z

    void validate(const Tolerances& tol = Tolerances::defaults()) const;
};

class SpatialModel {
public:
    explicit SpatialModel(SpatialModelSpec spec);

    const SpatialModelSpec& spec() const { return spec_; }
    const IdealModel& ideal() const { return ideal_; }

    SpacePtr x_space() const { return x_space_; }
    SpacePtr z_space() const { return z_space_; }
    ProductSpace zx_space() const;    // Z * X
    ProductSpace full_space() const;  // O * S * Z * X

    int in_range(Eigen::Index zeta_idx, Eigen::Index xi_idx) const;

    // (P_f, P_ftilde) on Z * X; diagonal 0/1 projectors, P_ftilde = 1 - P_f.
    std::pair<LinOp, LinOp> range_projectors() const;

    // Gated interaction Hamiltonian (ideal Hamiltonian) (x) P_f. Dim-capped.
    LinOp hamiltonian() const;
    // Closed-form evolution 1 (x) P_ftilde + sum_i u_i (x) P_i (x) P_f. Dim-capped.
    LinOp unitary() const;

    // |Z,O> (x) |X,S> from psi_z and psi_xs. Dim-capped.
    Ket initial_state() const;

    // Evolved pointer operator and its M+1-branch expansion; branch 0 carries
    // the untouched pointer with the out-of-range label. Dim-capped.
    std::pair<LinOp, BranchDecomposition> evolved_pointer() const;

    // Branch weights 0..M by pure grid sums; never builds operators.
    BranchWeightReport weights() const;

    // Same weights through dense label expectations; validation path only.
    BranchWeightReport operator_path_weights() const;

    // True iff translating both wavefunctions by the same lattice vector
    // leaves every weight unchanged within tol.equivalence. Throws when a
    // nonzero amplitude would be pushed off its grid.
    bool translated_weights_match(std::span<const int> shift,
                                  const Tolerances& tol = Tolerances::defaults()) const;

private:
    void require_operator_path(const char* what) const;

    SpatialModelSpec spec_;
    IdealModel ideal_;
    SpacePtr z_space_;
    SpacePtr x_space_;
};

}  // namespace everett
