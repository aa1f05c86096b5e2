#include "everett/spatial.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "everett/summation.hpp"

namespace everett {

bool within_ball(double dist, double radius, BallBoundary boundary) {
    return boundary == BallBoundary::Closed ? dist <= radius : dist < radius;
}

SpatialGrid::SpatialGrid(int dimension, int points_per_axis, double spacing,
                         std::vector<double> origin)
    : dimension_(dimension),
      points_per_axis_(points_per_axis),
      spacing_(spacing),
      origin_(std::move(origin)) {
    if (dimension_ < 1 || dimension_ > 3)
        throw std::invalid_argument("grid dimension must be 1, 2, or 3");
    if (points_per_axis_ < 1) throw std::invalid_argument("grid needs >= 1 point per axis");
    if (!(spacing_ > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
    if (origin_.empty()) origin_.assign(static_cast<std::size_t>(dimension_), 0.0);
    if (static_cast<int>(origin_.size()) != dimension_)
        throw std::invalid_argument("grid origin arity mismatch");
    point_count_ = 1;
    for (int ax = 0; ax < dimension_; ++ax) point_count_ *= points_per_axis_;
}

Eigen::VectorXd SpatialGrid::point(Eigen::Index k) const {
    const std::vector<int> multi = multi_index(k);
    Eigen::VectorXd p(dimension_);
    for (int ax = 0; ax < dimension_; ++ax)
        p(ax) = origin_[static_cast<std::size_t>(ax)] + spacing_ * multi[static_cast<std::size_t>(ax)];
    return p;
}

std::vector<int> SpatialGrid::multi_index(Eigen::Index k) const {
    if (k < 0 || k >= point_count_) throw std::out_of_range("grid index out of range");
    std::vector<int> multi(static_cast<std::size_t>(dimension_));
    for (int ax = dimension_; ax-- > 0;) {
        multi[static_cast<std::size_t>(ax)] = static_cast<int>(k % points_per_axis_);
        k /= points_per_axis_;
    }
    return multi;
}

Eigen::Index SpatialGrid::flat_index(std::span<const int> multi) const {
    if (static_cast<int>(multi.size()) != dimension_)
        throw std::invalid_argument("grid multi-index arity mismatch");
    Eigen::Index flat = 0;
    for (int ax = 0; ax < dimension_; ++ax) {
        const int m = multi[static_cast<std::size_t>(ax)];
        if (m < 0 || m >= points_per_axis_) throw std::out_of_range("grid multi-index out of range");
        flat = flat * points_per_axis_ + m;
    }
    return flat;
}

bool SpatialGrid::contains(std::span<const int> multi) const {
    if (static_cast<int>(multi.size()) != dimension_) return false;
    for (const int m : multi)
        if (m < 0 || m >= points_per_axis_) return false;
    return true;
}

double SpatialGrid::diameter() const {
    return spacing_ * (points_per_axis_ - 1) * std::sqrt(static_cast<double>(dimension_));
}

std::vector<std::string> SpatialGrid::point_labels() const {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(point_count_));
    for (Eigen::Index k = 0; k < point_count_; ++k) {
        const Eigen::VectorXd p = point(k);
        std::string s = "(";
        for (int ax = 0; ax < dimension_; ++ax) {
            if (ax) s += ",";
            s += std::to_string(p(ax));
        }
        s += ")";
        labels.push_back(std::move(s));
    }
    return labels;
}

int range_indicator(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi, double radius,
                    BallBoundary boundary) {
    if (zeta.size() != xi.size())
        throw std::invalid_argument("range_indicator: coordinate arity mismatch");
    return within_ball((zeta - xi).norm(), radius, boundary) ? 1 : 0;
}

void SpatialModelSpec::validate(const Tolerances& tol) const {
    ideal.validate(false, tol);
    if (radius < 0.0) throw std::invalid_argument("interaction radius must be >= 0");
    if (grid_x.dimension() != grid_z.dimension())
        throw std::invalid_argument("grid_x and grid_z must share a spatial dimension");
    if (psi_xs.rows() != ideal.outcome_count || psi_xs.cols() != grid_x.point_count())
        throw std::invalid_argument("psi_xs: expected " + std::to_string(ideal.outcome_count) +
                                    " x " + std::to_string(grid_x.point_count()) +
                                    " amplitudes, got " + std::to_string(psi_xs.rows()) + " x " +
                                    std::to_string(psi_xs.cols()));
    if (psi_z.size() != grid_z.point_count())
        throw std::invalid_argument("psi_z: expected " + std::to_string(grid_z.point_count()) +
                                    " amplitudes, got " + std::to_string(psi_z.size()));
    const double nxs = psi_xs.squaredNorm();
    if (std::abs(nxs - 1.0) > tol.state_norm)
        throw std::invalid_argument("psi_xs: squared amplitudes must sum to 1 (got " +
                                    std::to_string(nxs) + ")");
    const double nz = psi_z.squaredNorm();
    if (std::abs(nz - 1.0) > tol.state_norm)
        throw std::invalid_argument("psi_z: squared amplitudes must sum to 1 (got " +
                                    std::to_string(nz) + ")");
}

SpatialModel::SpatialModel(SpatialModelSpec spec)
    : spec_(std::move(spec)), ideal_(spec_.ideal) {
    spec_.validate();
    z_space_ = make_space("Z", spec_.grid_z.point_labels());
    x_space_ = make_space("X", spec_.grid_x.point_labels());
}

ProductSpace SpatialModel::zx_space() const { return ProductSpace({z_space_, x_space_}); }

ProductSpace SpatialModel::full_space() const {
    return ProductSpace({ideal_.observer_space(), ideal_.system_space(), z_space_, x_space_});
}

int SpatialModel::in_range(Eigen::Index zeta_idx, Eigen::Index xi_idx) const {
    return range_indicator(spec_.grid_z.point(zeta_idx), spec_.grid_x.point(xi_idx),
                           spec_.radius, spec_.boundary);
}

void SpatialModel::require_operator_path(const char* what) const {
    if (full_space().dim() > kOperatorPathDimCap)
        throw std::invalid_argument(std::string(what) + ": operator path too large; use formula path (dim " +
                                    std::to_string(full_space().dim()) + " > " +
                                    std::to_string(kOperatorPathDimCap) + ")");
}

std::pair<LinOp, LinOp> SpatialModel::range_projectors() const {
    const ProductSpace zx = zx_space();
    Eigen::VectorXd f(zx.dim());
    Eigen::Index k = 0;
    for (Eigen::Index zi = 0; zi < spec_.grid_z.point_count(); ++zi)
        for (Eigen::Index xi = 0; xi < spec_.grid_x.point_count(); ++xi, ++k)
            f(k) = static_cast<double>(in_range(zi, xi));
    LinOp pf = LinOp::diagonal(zx, f);
    LinOp pft = LinOp::diagonal(zx, Eigen::VectorXd::Ones(zx.dim()) - f);
    return {std::move(pf), std::move(pft)};
}

LinOp SpatialModel::hamiltonian() const {
    require_operator_path("hamiltonian");
    return kron(ideal_.hamiltonian(), range_projectors().first);
}

LinOp SpatialModel::unitary() const {
    require_operator_path("unitary");
    const auto [pf, pft] = range_projectors();
    const ProductSpace os({ideal_.observer_space(), ideal_.system_space()});
    LinOp u = kron(LinOp::identity(os), pft);
    for (int i = 1; i <= ideal_.outcomes(); ++i)
        u += kron(kron(ideal_.outcome_rotation(i), ideal_.system_projector(i)), pf);
    return u;
}

Ket SpatialModel::initial_state() const {
    require_operator_path("initial_state");
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();
    const int m = ideal_.outcomes();

    // amp(o, s, zeta, xi) = delta_{o,0} psi_z(zeta) psi_xs(s+1, xi)
    const ProductSpace full = full_space();
    Vector amps = Vector::Zero(full.dim());
    for (int s = 0; s < m; ++s)
        for (Eigen::Index zi = 0; zi < nz; ++zi)
            for (Eigen::Index xi = 0; xi < nx; ++xi)
                amps(((s * nz) + zi) * nx + xi) = spec_.psi_z(zi) * spec_.psi_xs(s, xi);
    return Ket(full, std::move(amps));
}

std::pair<LinOp, BranchDecomposition> SpatialModel::evolved_pointer() const {
    require_operator_path("evolved_pointer");
    const auto [pf, pft] = range_projectors();
    const LinOp b = ideal_.pointer_observable();

    const ProductSpace rest({ideal_.system_space(), z_space_, x_space_});
    const LinOp evolved = heisenberg_evolve(kron(b, LinOp::identity(rest)), unitary());

    const LinOp id_s = LinOp::identity(ProductSpace(ideal_.system_space()));
    BranchDecomposition decomp;
    decomp.branches.push_back({spec_.ideal.betas[0], b, kron(id_s, pft)});
    for (int i = 1; i <= ideal_.outcomes(); ++i) {
        const LinOp u_i = ideal_.outcome_rotation(i);
        decomp.branches.push_back({spec_.ideal.betas[static_cast<std::size_t>(i)],
                                   u_i.adjoint() * b * u_i,
                                   kron(ideal_.system_projector(i), pf)});
    }
    return {evolved, std::move(decomp)};
}

BranchWeightReport SpatialModel::weights() const {
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();
    const int m = ideal_.outcomes();

    std::vector<KahanSum> acc(static_cast<std::size_t>(m) + 1);
    for (Eigen::Index zi = 0; zi < nz; ++zi) {
        const double wz = std::norm(spec_.psi_z(zi));
        for (Eigen::Index xi = 0; xi < nx; ++xi) {
            const bool f = in_range(zi, xi) != 0;
            for (int i = 1; i <= m; ++i) {
                const double t = wz * std::norm(spec_.psi_xs(i - 1, xi));
                acc[f ? static_cast<std::size_t>(i) : 0].add(t);
            }
        }
    }

    BranchWeightReport report;
    KahanSum sum;
    for (int i = 0; i <= m; ++i) {
        const double w = acc[static_cast<std::size_t>(i)].value();
        report.entries.push_back({i, spec_.ideal.betas[static_cast<std::size_t>(i)], w});
        sum.add(w);
    }
    report.sum = sum.value();
    return report;
}

BranchWeightReport SpatialModel::operator_path_weights() const {
    require_operator_path("operator_path_weights");
    const auto [pf, pft] = range_projectors();
    const ProductSpace full = full_space();
    const Ket state = initial_state();
    const LinOp id_o = LinOp::identity(ProductSpace(ideal_.observer_space()));
    const LinOp id_s = LinOp::identity(ProductSpace(ideal_.system_space()));

    BranchWeightReport report;
    KahanSum sum;
    {
        const LinOp label0 = kron(kron(id_o, id_s), pft);
        const double w = expectation(state, label0).real();
        report.entries.push_back({0, spec_.ideal.betas[0], w});
        sum.add(w);
    }
    for (int i = 1; i <= ideal_.outcomes(); ++i) {
        const LinOp label = kron(kron(id_o, ideal_.system_projector(i)), pf);
        const double w = expectation(state, label).real();
        report.entries.push_back({i, spec_.ideal.betas[static_cast<std::size_t>(i)], w});
        sum.add(w);
    }
    report.sum = sum.value();
    return report;
}

namespace {

// Shift a per-point array by an integer lattice vector, zero where the source
// would come from off-grid. Throws when a nonzero amplitude falls off.
Vector shifted_amplitudes(const SpatialGrid& grid, const Vector& amps,
                          std::span<const int> shift, const char* what) {
    if (static_cast<int>(shift.size()) != grid.dimension())
        throw std::invalid_argument(std::string(what) + ": shift arity mismatch");
    Vector out = Vector::Zero(amps.size());
    for (Eigen::Index k = 0; k < amps.size(); ++k) {
        if (amps(k) == Complex(0.0, 0.0)) continue;
        std::vector<int> multi = grid.multi_index(k);
        for (int ax = 0; ax < grid.dimension(); ++ax)
            multi[static_cast<std::size_t>(ax)] += shift[static_cast<std::size_t>(ax)];
        if (!grid.contains(multi))
            throw std::invalid_argument(std::string(what) + ": shift violates support margin at grid index " +
                                        std::to_string(k));
        out(grid.flat_index(multi)) = amps(k);
    }
    return out;
}

}  // namespace

bool SpatialModel::translated_weights_match(std::span<const int> shift, const Tolerances& tol) const {
    if (spec_.grid_x.spacing() != spec_.grid_z.spacing())
        throw std::invalid_argument("translated_weights_match: grids must share a spacing");

    SpatialModelSpec shifted = spec_;
    shifted.psi_z = shifted_amplitudes(spec_.grid_z, spec_.psi_z, shift, "psi_z");
    for (int i = 0; i < ideal_.outcomes(); ++i) {
        const Vector row = spec_.psi_xs.row(i).transpose();
        shifted.psi_xs.row(i) = shifted_amplitudes(spec_.grid_x, row, shift, "psi_xs").transpose();
    }

    const BranchWeightReport before = weights();
    const BranchWeightReport after = SpatialModel(shifted).weights();
    for (std::size_t k = 0; k < before.entries.size(); ++k)
        if (std::abs(before.entries[k].weight - after.entries[k].weight) > tol.equivalence)
            return false;
    return true;
}

}  // namespace everett
