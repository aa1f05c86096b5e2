#include "everett/multi_observer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "everett/summation.hpp"

namespace everett {

namespace {

// exp(-i h theta-rotation) in span{|0>,|target>}; the closed form of the
// ready-state rotation used by every measuring device here.
Matrix rotation_matrix(Eigen::Index dim, Eigen::Index target, double theta) {
    Matrix m = Matrix::Identity(dim, dim);
    m(0, 0) = std::cos(theta);
    m(target, target) = std::cos(theta);
    m(target, 0) = std::sin(theta);
    m(0, target) = -std::sin(theta);
    return m;
}

std::vector<std::string> indexed_labels(const char* prefix, int count) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) labels.push_back(std::string(prefix) + std::to_string(i));
    return labels;
}

}  // namespace

GIndexMap::GIndexMap(int outcome_count) : outcome_count_(outcome_count) {
    if (outcome_count < 1) throw std::invalid_argument("outcome count must be >= 1");
}

int GIndexMap::index_of(int i, int j) const {
    if (i < 0 || i > outcome_count_ || j < 0 || j > outcome_count_)
        throw std::out_of_range("joint outcome index out of range");
    return 1 + i * (outcome_count_ + 1) + j;
}

std::pair<int, int> GIndexMap::outcome_pair(int I) const {
    if (I < 1 || I > (outcome_count_ + 1) * (outcome_count_ + 1))
        throw std::out_of_range("verifier state " + std::to_string(I) +
                                " does not encode an outcome pair");
    return {(I - 1) / (outcome_count_ + 1), (I - 1) % (outcome_count_ + 1)};
}

double MultiObserverSpec::kappa(int p) const {
    const double tau = p == 1 ? tau1 : tau2;
    return std::numbers::pi / (2.0 * tau);
}

double MultiObserverSpec::kappa_g() const { return std::numbers::pi / (2.0 * tau_g); }

void MultiObserverSpec::validate(const Tolerances& tol) const {
    ideal.validate(false, tol);
    if (radius1 < 0.0 || radius2 < 0.0)
        throw std::invalid_argument("interaction radii must be >= 0");
    if (grid_x.dimension() != grid_z.dimension())
        throw std::invalid_argument("grid_x and grid_z must share a spatial dimension");
    if (offset1.size() != grid_x.dimension() || offset2.size() != grid_x.dimension())
        throw std::invalid_argument("observer offsets must match the grid dimension");
    if (!(tau1 > 0.0) || !(tau2 > 0.0) || !(tau_g > 0.0))
        throw std::invalid_argument("coupling times must be > 0");
    if (psi_xs.rows() != ideal.outcome_count || psi_xs.cols() != grid_x.point_count())
        throw std::invalid_argument("psi_xs: expected " + std::to_string(ideal.outcome_count) +
                                    " x " + std::to_string(grid_x.point_count()) + " amplitudes");
    if (psi_z.size() != grid_z.point_count())
        throw std::invalid_argument("psi_z: expected " + std::to_string(grid_z.point_count()) +
                                    " amplitudes, got " + std::to_string(psi_z.size()));
    const double joint = psi_xs.squaredNorm() * psi_z.squaredNorm();
    if (std::abs(joint - 1.0) > tol.state_norm)
        throw std::invalid_argument("joint normalization violated: (sum |psi_xs|^2)(sum |psi_z|^2) = " +
                                    std::to_string(joint) + ", expected 1");
}

void JointWeightMatrix::require_valid(const Tolerances& tol) const {
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
        for (Eigen::Index j = 0; j < weights.cols(); ++j)
            if (weights(i, j) < -tol.weight_range)
                throw std::runtime_error("joint weight (" + std::to_string(i) + "," +
                                         std::to_string(j) + ") is negative: " +
                                         std::to_string(weights(i, j)));
    if (std::abs(total - 1.0) > tol.weight_sum)
        throw std::runtime_error("joint weights sum to " + std::to_string(total) + ", expected 1");
}

MultiObserverModel::MultiObserverModel(MultiObserverSpec spec)
    : spec_(std::move(spec)), g_index_(spec_.ideal.outcome_count), ideal_(spec_.ideal) {
    spec_.validate();
    verifier_ = make_space("G", indexed_labels("gamma", g_index_.state_count()));
    observer1_ = make_space("O1", indexed_labels("beta", outcomes() + 1));
    observer2_ = make_space("O2", indexed_labels("beta", outcomes() + 1));
    z_space_ = make_space("Z", spec_.grid_z.point_labels());
    x_space_ = make_space("X", spec_.grid_x.point_labels());
}

SpacePtr MultiObserverModel::observer_space(int p) const {
    if (p != 1 && p != 2) throw std::out_of_range("observer index must be 1 or 2");
    return p == 1 ? observer1_ : observer2_;
}

ProductSpace MultiObserverModel::full_space() const {
    return ProductSpace({verifier_, observer1_, observer2_, ideal_.system_space(), z_space_, x_space_});
}

ProductSpace MultiObserverModel::label_space() const {
    return ProductSpace({observer1_, observer2_, ideal_.system_space(), z_space_, x_space_});
}

int MultiObserverModel::in_range(int p, Eigen::Index zeta_idx, Eigen::Index xi_idx) const {
    if (p != 1 && p != 2) throw std::out_of_range("observer index must be 1 or 2");
    const Eigen::VectorXd& d = p == 1 ? spec_.offset1 : spec_.offset2;
    const double a = p == 1 ? spec_.radius1 : spec_.radius2;
    const Eigen::VectorXd displaced = spec_.grid_z.point(zeta_idx) + d;
    return within_ball((spec_.grid_x.point(xi_idx) - displaced).norm(), a, spec_.boundary) ? 1 : 0;
}

JointWeightMatrix MultiObserverModel::joint_weights() const {
    const int m = outcomes();
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();

    std::vector<KahanSum> acc(static_cast<std::size_t>((m + 1) * (m + 1)));
    auto at = [m, &acc](int i, int j) -> KahanSum& {
        return acc[static_cast<std::size_t>(i * (m + 1) + j)];
    };

    for (Eigen::Index zi = 0; zi < nz; ++zi) {
        const double wz = std::norm(spec_.psi_z(zi));
        for (Eigen::Index xi = 0; xi < nx; ++xi) {
            const bool f1 = in_range(1, zi, xi) != 0;
            const bool f2 = in_range(2, zi, xi) != 0;
            if (!f1 && !f2) {
                KahanSum& cell = at(0, 0);
                for (int k = 1; k <= m; ++k) cell.add(wz * std::norm(spec_.psi_xs(k - 1, xi)));
            } else if (f1 && !f2) {
                for (int i = 1; i <= m; ++i) at(i, 0).add(wz * std::norm(spec_.psi_xs(i - 1, xi)));
            } else if (!f1 && f2) {
                for (int j = 1; j <= m; ++j) at(0, j).add(wz * std::norm(spec_.psi_xs(j - 1, xi)));
            } else {
                for (int i = 1; i <= m; ++i) at(i, i).add(wz * std::norm(spec_.psi_xs(i - 1, xi)));
            }
        }
    }

    JointWeightMatrix out;
    out.weights = Eigen::MatrixXd::Zero(m + 1, m + 1);
    KahanSum total;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            out.weights(i, j) = at(i, j).value();
            total.add(out.weights(i, j));
        }
    out.total = total.value();
    return out;
}

LocalizationReport MultiObserverModel::check_separated(const Tolerances& tol) const {
    const double separation = (spec_.offset1 - spec_.offset2).norm();
    if (!(separation > spec_.radius1 + spec_.radius2))
        throw std::invalid_argument(
            "case1 requires strictly separated interaction regions: |d1 - d2| = " +
            std::to_string(separation) + " must exceed a1 + a2 = " +
            std::to_string(spec_.radius1 + spec_.radius2));

    LocalizationReport report;
    report.weights = joint_weights();
    report.threshold = tol.locality_zero;
    for (int i = 1; i <= outcomes(); ++i)
        for (int j = 1; j <= outcomes(); ++j)
            report.max_forbidden = std::max(report.max_forbidden,
                                            std::abs(report.weights.weights(i, j)));
    report.pass = report.max_forbidden <= report.threshold;
    return report;
}

LocalizationReport MultiObserverModel::check_coincident(const Tolerances& tol) const {
    if (spec_.offset1 != spec_.offset2 || spec_.radius1 != spec_.radius2)
        throw std::invalid_argument("case2 requires coincident interaction regions: d1 = d2 and a1 = a2");

    LocalizationReport report;
    report.weights = joint_weights();
    report.threshold = tol.locality_zero;
    for (int i = 0; i <= outcomes(); ++i)
        for (int j = 0; j <= outcomes(); ++j) {
            if (i == j) continue;  // diagonal (and both-ignorant) entries carry the weight
            report.max_forbidden = std::max(report.max_forbidden,
                                            std::abs(report.weights.weights(i, j)));
        }
    report.pass = report.max_forbidden <= report.threshold;
    return report;
}

void MultiObserverModel::require_operator_path(const char* what) const {
    if (full_space().dim() > kOperatorPathDimCap)
        throw std::invalid_argument(std::string(what) + ": operator path too large; use formula path (dim " +
                                    std::to_string(full_space().dim()) + " > " +
                                    std::to_string(kOperatorPathDimCap) + ")");
}

LinOp MultiObserverModel::conjugated_projector(int p, int outcome, int through) const {
    const SpacePtr obs = observer_space(p);
    const Matrix u = rotation_matrix(obs->dim(), through, std::numbers::pi / 2.0);
    Matrix proj = Matrix::Zero(obs->dim(), obs->dim());
    proj(outcome, outcome) = 1.0;
    return LinOp(ProductSpace(obs), u.adjoint() * proj * u);
}

std::vector<LinOp> MultiObserverModel::g_labels() const {
    require_operator_path("g_labels");
    const int m = outcomes();
    const ProductSpace zx({z_space_, x_space_});
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();

    // Diagonal 0/1 masks over (zeta, xi) for the four in/out-of-range sectors.
    Eigen::VectorXd m00(zx.dim()), m10(zx.dim()), m01(zx.dim()), m11(zx.dim());
    Eigen::Index k = 0;
    for (Eigen::Index zi = 0; zi < nz; ++zi)
        for (Eigen::Index xi = 0; xi < nx; ++xi, ++k) {
            const double f1 = static_cast<double>(in_range(1, zi, xi));
            const double f2 = static_cast<double>(in_range(2, zi, xi));
            m00(k) = (1.0 - f1) * (1.0 - f2);
            m10(k) = f1 * (1.0 - f2);
            m01(k) = (1.0 - f1) * f2;
            m11(k) = f1 * f2;
        }
    const LinOp d00 = LinOp::diagonal(zx, m00);
    const LinOp d10 = LinOp::diagonal(zx, m10);
    const LinOp d01 = LinOp::diagonal(zx, m01);
    const LinOp d11 = LinOp::diagonal(zx, m11);

    const LinOp id_s = LinOp::identity(ProductSpace(ideal_.system_space()));

    std::vector<LinOp> labels;
    labels.reserve(static_cast<std::size_t>((m + 1) * (m + 1)));
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            const LinOp pi1 = LinOp::basis_projector(observer1_, i);
            const LinOp pj2 = LinOp::basis_projector(observer2_, j);
            LinOp label = kron(kron(kron(pi1, pj2), id_s), d00);
            for (int via = 1; via <= m; ++via) {
                const LinOp ps = ideal_.system_projector(via);
                label += kron(kron(kron(conjugated_projector(1, i, via), pj2), ps), d10);
                label += kron(kron(kron(pi1, conjugated_projector(2, j, via)), ps), d01);
                label += kron(kron(kron(conjugated_projector(1, i, via),
                                        conjugated_projector(2, j, via)), ps), d11);
            }
            labels.push_back(std::move(label));
        }
    return labels;
}

LinOp MultiObserverModel::observer_unitary(int p) const {
    require_operator_path("observer_unitary");
    const ProductSpace full = full_space();
    const ProductSpace zx({z_space_, x_space_});
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();

    Eigen::VectorXd f(zx.dim());
    Eigen::Index k = 0;
    for (Eigen::Index zi = 0; zi < nz; ++zi)
        for (Eigen::Index xi = 0; xi < nx; ++xi, ++k)
            f(k) = static_cast<double>(in_range(p, zi, xi));
    const LinOp pf = LinOp::diagonal(zx, f);
    const LinOp pft = LinOp::diagonal(zx, Eigen::VectorXd::Ones(zx.dim()) - f);

    const LinOp id_g = LinOp::identity(ProductSpace(verifier_));
    const LinOp id_o1 = LinOp::identity(ProductSpace(observer1_));
    const LinOp id_o2 = LinOp::identity(ProductSpace(observer2_));
    const LinOp id_s = LinOp::identity(ProductSpace(ideal_.system_space()));

    LinOp u = kron(kron(kron(kron(id_g, id_o1), id_o2), id_s), pft);
    for (int i = 1; i <= outcomes(); ++i) {
        const SpacePtr obs = observer_space(p);
        const LinOp rot(ProductSpace(obs), rotation_matrix(obs->dim(), i, std::numbers::pi / 2.0));
        const LinOp on_o1 = p == 1 ? rot : id_o1;
        const LinOp on_o2 = p == 2 ? rot : id_o2;
        u += kron(kron(kron(kron(id_g, on_o1), on_o2), ideal_.system_projector(i)), pf);
    }
    return u;
}

LinOp MultiObserverModel::verifier_unitary() const {
    require_operator_path("verifier_unitary");
    const ProductSpace rest({ideal_.system_space(), z_space_, x_space_});
    const LinOp id_rest = LinOp::identity(rest);

    LinOp u = LinOp::zero(full_space());
    for (int i = 0; i <= outcomes(); ++i)
        for (int j = 0; j <= outcomes(); ++j) {
            const LinOp rot(ProductSpace(verifier_),
                            rotation_matrix(verifier_->dim(), g_index_.index_of(i, j),
                                            std::numbers::pi / 2.0));
            u += kron(kron(kron(rot, LinOp::basis_projector(observer1_, i)),
                           LinOp::basis_projector(observer2_, j)),
                      id_rest);
        }
    return u;
}

LinOp MultiObserverModel::total_unitary() const {
    return verifier_unitary() * observer_unitary(2) * observer_unitary(1);
}

LinOp MultiObserverModel::verifier_pointer() const {
    Eigen::VectorXd gamma(verifier_->dim());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) gamma(i) = static_cast<double>(i);
    return LinOp::diagonal(verifier_, gamma);
}

Ket MultiObserverModel::initial_state() const {
    require_operator_path("initial_state");
    const ProductSpace full = full_space();
    const Eigen::Index nz = spec_.grid_z.point_count();
    const Eigen::Index nx = spec_.grid_x.point_count();
    const int m = outcomes();

    // Verifier and both observers start ignorant; indices (0,0,0,s,zeta,xi).
    Vector amps = Vector::Zero(full.dim());
    for (int s = 0; s < m; ++s)
        for (Eigen::Index zi = 0; zi < nz; ++zi)
            for (Eigen::Index xi = 0; xi < nx; ++xi)
                amps(((static_cast<Eigen::Index>(s) * nz) + zi) * nx + xi) =
                    spec_.psi_z(zi) * spec_.psi_xs(s, xi);
    return Ket(full, std::move(amps));
}

BranchWeightReport MultiObserverModel::operator_path_weights() const {
    require_operator_path("operator_path_weights");
    const Ket state = initial_state();
    const LinOp id_g = LinOp::identity(ProductSpace(verifier_));
    const std::vector<LinOp> labels = g_labels();

    BranchWeightReport report;
    KahanSum sum;
    const int m = outcomes();
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            const LinOp& label = labels[static_cast<std::size_t>(i * (m + 1) + j)];
            const double w = expectation(state, kron(id_g, label)).real();
            report.entries.push_back({i * (m + 1) + j,
                                      static_cast<double>(g_index_.index_of(i, j)), w});
            sum.add(w);
        }
    report.sum = sum.value();
    return report;
}

}  // namespace everett
