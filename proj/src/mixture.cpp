#include "everett/mixture.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "everett/summation.hpp"

namespace everett {

void MixtureSpec::validate(const Tolerances& tol) const {
    ideal.validate(false, tol);
    if (radius < 0.0) throw std::invalid_argument("interaction radius must be >= 0");
    if (grid_x.dimension() != grid_z.dimension())
        throw std::invalid_argument("grid_x and grid_z must share a spatial dimension");
    if (psi_xs.rows() != ideal.outcome_count || psi_xs.cols() != grid_x.point_count())
        throw std::invalid_argument("psi_xs: expected " + std::to_string(ideal.outcome_count) +
                                    " x " + std::to_string(grid_x.point_count()) + " amplitudes");
    const double nxs = psi_xs.squaredNorm();
    if (std::abs(nxs - 1.0) > tol.state_norm)
        throw std::invalid_argument("psi_xs: squared amplitudes must sum to 1 (got " +
                                    std::to_string(nxs) + ")");
    if (member_prob.size() != grid_z.point_count())
        throw std::invalid_argument("p: expected " + std::to_string(grid_z.point_count()) +
                                    " member probabilities, got " + std::to_string(member_prob.size()));
    KahanSum psum;
    for (Eigen::Index k = 0; k < member_prob.size(); ++k) {
        if (member_prob(k) < 0.0)
            throw std::invalid_argument("p: member probability " + std::to_string(k) + " is negative");
        psum.add(member_prob(k));
    }
    if (std::abs(psum.value() - 1.0) > tol.state_norm)
        throw std::invalid_argument("p: member probabilities must sum to 1 (got " +
                                    std::to_string(psum.value()) + ")");
    // member offsets must land on the grid_x lattice
    for (Eigen::Index zi = 0; zi < grid_z.point_count(); ++zi) {
        const Eigen::VectorXd zeta = grid_z.point(zi);
        for (Eigen::Index ax = 0; ax < zeta.size(); ++ax) {
            const double steps = zeta(ax) / grid_x.spacing();
            if (std::abs(steps - std::round(steps)) > 1e-9)
                throw std::invalid_argument("mixture member " + std::to_string(zi) +
                                            ": offset is not a lattice vector of grid_x");
        }
    }
}

void DensityOp::require_valid(const Tolerances& tol) const {
    if (max_abs_diff(mat, mat.adjoint()) > tol.hermitian)
        throw std::runtime_error("density operator not Hermitian");
    if (std::abs(trace() - 1.0) > tol.weight_sum)
        throw std::runtime_error("density operator trace is " + std::to_string(trace()) +
                                 ", expected 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.unitary)
        throw std::runtime_error("density operator has negative eigenvalue " +
                                 std::to_string(es.eigenvalues().minCoeff()));
}

MixtureModel::MixtureModel(MixtureSpec spec) : spec_(std::move(spec)), ideal_(spec_.ideal) {
    spec_.validate();
    x_space_ = make_space("X", spec_.grid_x.point_labels());
}

ProductSpace MixtureModel::full_space() const {
    return ProductSpace({ideal_.observer_space(), ideal_.system_space(), x_space_});
}

int MixtureModel::origin_indicator(Eigen::Index xi_idx) const {
    return within_ball(spec_.grid_x.point(xi_idx).norm(), spec_.radius, spec_.boundary) ? 1 : 0;
}

LinOp MixtureModel::origin_projector() const {
    Eigen::VectorXd g(spec_.grid_x.point_count());
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = static_cast<double>(origin_indicator(k));
    return LinOp::diagonal(x_space_, g);
}

std::vector<int> MixtureModel::member_shift(Eigen::Index zeta_idx) const {
    const Eigen::VectorXd zeta = spec_.grid_z.point(zeta_idx);
    const double h = spec_.grid_x.spacing();
    std::vector<int> shift(static_cast<std::size_t>(zeta.size()));
    for (Eigen::Index ax = 0; ax < zeta.size(); ++ax) {
        const double steps = zeta(ax) / h;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-9)
            throw std::invalid_argument("mixture member " + std::to_string(zeta_idx) +
                                        ": offset is not a lattice vector of grid_x");
        shift[static_cast<std::size_t>(ax)] = static_cast<int>(rounded);
    }
    return shift;
}

Eigen::MatrixXcd MixtureModel::member_wavefunction(Eigen::Index zeta_idx) const {
    const std::vector<int> shift = member_shift(zeta_idx);
    const SpatialGrid& grid = spec_.grid_x;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(spec_.psi_xs.rows(), spec_.psi_xs.cols());
    for (Eigen::Index j = 0; j < grid.point_count(); ++j) {
        std::vector<int> src = grid.multi_index(j);
        for (std::size_t ax = 0; ax < shift.size(); ++ax) src[ax] += shift[ax];
        if (!grid.contains(src)) continue;  // zero-fill past the edge
        out.col(j) = spec_.psi_xs.col(grid.flat_index(src));
    }
    return out;
}

BranchWeightReport MixtureModel::member_weights(Eigen::Index zeta_idx) const {
    const Eigen::MatrixXcd chi = member_wavefunction(zeta_idx);
    const int m = ideal_.outcomes();

    std::vector<KahanSum> acc(static_cast<std::size_t>(m) + 1);
    for (Eigen::Index xi = 0; xi < spec_.grid_x.point_count(); ++xi) {
        const bool g = origin_indicator(xi) != 0;
        for (int i = 1; i <= m; ++i)
            acc[g ? static_cast<std::size_t>(i) : 0].add(std::norm(chi(i - 1, xi)));
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

BranchWeightReport MixtureModel::weights() const {
    const int m = ideal_.outcomes();
    std::vector<KahanSum> acc(static_cast<std::size_t>(m) + 1);
    for (Eigen::Index zi = 0; zi < spec_.grid_z.point_count(); ++zi) {
        const double p = spec_.member_prob(zi);
        if (p == 0.0) continue;
        const BranchWeightReport member = member_weights(zi);
        for (int i = 0; i <= m; ++i)
            acc[static_cast<std::size_t>(i)].add(p * member.entries[static_cast<std::size_t>(i)].weight);
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

Ket MixtureModel::member_state(Eigen::Index zeta_idx) const {
    const Eigen::MatrixXcd chi = member_wavefunction(zeta_idx);
    const ProductSpace full = full_space();
    const Eigen::Index nx = spec_.grid_x.point_count();
    Vector amps = Vector::Zero(full.dim());
    for (int s = 0; s < ideal_.outcomes(); ++s)
        for (Eigen::Index xi = 0; xi < nx; ++xi) amps(s * nx + xi) = chi(s, xi);
    return Ket(full, std::move(amps));
}

DensityOp MixtureModel::initial_density() const {
    const ProductSpace full = full_space();
    if (full.dim() > kOperatorPathDimCap)
        throw std::invalid_argument("initial_density: operator path too large; use formula path (dim " +
                                    std::to_string(full.dim()) + " > " +
                                    std::to_string(kOperatorPathDimCap) + ")");
    Matrix rho = Matrix::Zero(full.dim(), full.dim());
    for (Eigen::Index zi = 0; zi < spec_.grid_z.point_count(); ++zi) {
        const double p = spec_.member_prob(zi);
        if (p == 0.0) continue;
        const Vector v = member_state(zi).amps();
        rho += p * (v * v.adjoint());
    }
    return DensityOp{full, std::move(rho)};
}

BranchWeightReport MixtureModel::density_path_weights() const {
    const DensityOp rho = initial_density();
    const LinOp pg = origin_projector();
    const LinOp pg_tilde = LinOp::identity(ProductSpace(x_space_)) - pg;
    const LinOp id_o = LinOp::identity(ProductSpace(ideal_.observer_space()));
    const LinOp id_s = LinOp::identity(ProductSpace(ideal_.system_space()));

    BranchWeightReport report;
    KahanSum sum;
    {
        const LinOp label0 = kron(kron(id_o, id_s), pg_tilde);
        const double w = (rho.mat * label0.mat()).trace().real();
        report.entries.push_back({0, spec_.ideal.betas[0], w});
        sum.add(w);
    }
    for (int i = 1; i <= ideal_.outcomes(); ++i) {
        const LinOp label = kron(kron(id_o, ideal_.system_projector(i)), pg);
        const double w = (rho.mat * label.mat()).trace().real();
        report.entries.push_back({i, spec_.ideal.betas[static_cast<std::size_t>(i)], w});
        sum.add(w);
    }
    report.sum = sum.value();
    return report;
}

EquivalenceReport verify_mixture_equivalence(const SpatialModelSpec& spatial_spec,
                                             const Tolerances& tol) {
    const SpatialModel spatial(spatial_spec);

    MixtureSpec mix;
    mix.ideal = spatial_spec.ideal;
    mix.grid_x = spatial_spec.grid_x;
    mix.grid_z = spatial_spec.grid_z;
    mix.radius = spatial_spec.radius;
    mix.boundary = spatial_spec.boundary;
    mix.psi_xs = spatial_spec.psi_xs;
    mix.member_prob = spatial_spec.psi_z.cwiseAbs2();
    const MixtureModel mixture(mix);

    // The change of variables behind the equivalence needs every displaced
    // support to stay on grid_x: reject members whose shift would clip.
    for (Eigen::Index zi = 0; zi < mix.grid_z.point_count(); ++zi) {
        if (mix.member_prob(zi) == 0.0) continue;
        const double lost = std::abs(mixture.member_wavefunction(zi).squaredNorm() -
                                     mix.psi_xs.squaredNorm());
        if (lost > tol.state_norm)
            throw std::invalid_argument("mixture member " + std::to_string(zi) +
                                        ": shifted support leaves grid_x (margin violated)");
    }

    EquivalenceReport report;
    report.spatial = spatial.weights();
    report.mixture = mixture.weights();
    for (std::size_t k = 0; k < report.spatial.entries.size(); ++k) {
        const double d = std::abs(report.spatial.entries[k].weight - report.mixture.entries[k].weight);
        report.abs_difference.push_back(d);
        report.max_abs_difference = std::max(report.max_abs_difference, d);
    }
    report.pass = report.max_abs_difference <= tol.equivalence;
    return report;
}

}  // namespace everett
