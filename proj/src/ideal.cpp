#include "everett/ideal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace everett {

namespace {

void require_distinct(const std::vector<double>& values, const char* what, double tol) {
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            if (std::abs(values[i] - values[j]) < tol)
                throw std::invalid_argument(std::string("nondegeneracy violated: ") + what +
                                            "[" + std::to_string(i) + "] and " + what + "[" +
                                            std::to_string(j) + "] coincide within " +
                                            std::to_string(tol));
}

std::vector<std::string> value_labels(const char* prefix, const std::vector<double>& values,
                                      std::size_t first_index) {
    std::vector<std::string> labels;
    labels.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        labels.push_back(std::string(prefix) + std::to_string(first_index + i));
    return labels;
}

}  // namespace

double IdealModelSpec::kappa() const { return std::numbers::pi / (2.0 * tau); }

void IdealModelSpec::validate(bool check_state, const Tolerances& tol) const {
    if (outcome_count < 1) throw std::invalid_argument("outcome count must be >= 1");
    if (static_cast<int>(alphas.size()) != outcome_count)
        throw std::invalid_argument("alphas: expected " + std::to_string(outcome_count) +
                                    " entries, got " + std::to_string(alphas.size()));
    if (static_cast<int>(betas.size()) != outcome_count + 1)
        throw std::invalid_argument("betas: expected " + std::to_string(outcome_count + 1) +
                                    " entries, got " + std::to_string(betas.size()));
    require_distinct(alphas, "alpha", tol.state_norm);
    require_distinct(betas, "beta", tol.state_norm);
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (check_state) {
        if (psi.size() != outcome_count)
            throw std::invalid_argument("psi: expected " + std::to_string(outcome_count) +
                                        " amplitudes, got " + std::to_string(psi.size()));
        const double n2 = psi.squaredNorm();
        if (std::abs(n2 - 1.0) > tol.state_norm)
            throw std::invalid_argument("psi: squared amplitudes must sum to 1 (got " +
                                        std::to_string(n2) + ")");
    }
}

double BranchWeightReport::weight_of(int branch) const {
    for (const auto& e : entries)
        if (e.branch == branch) return e.weight;
    throw std::out_of_range("no branch " + std::to_string(branch) + " in weight report");
}

void BranchWeightReport::require_valid(const Tolerances& tol) const {
    for (const auto& e : entries)
        if (e.weight < -tol.weight_range || e.weight > 1.0 + tol.weight_range)
            throw std::runtime_error("branch " + std::to_string(e.branch) +
                                     ": weight outside [0,1]: " + std::to_string(e.weight));
    if (std::abs(sum - 1.0) > tol.weight_sum)
        throw std::runtime_error("branch weights sum to " + std::to_string(sum) + ", expected 1");
}

IdealModel::IdealModel(IdealModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate(spec_.psi.size() > 0);
    observer_ = make_space("O", value_labels("beta", spec_.betas, 0));
    system_ = make_space("S", value_labels("alpha", spec_.alphas, 1));
}

ProductSpace IdealModel::joint_space() const { return ProductSpace({observer_, system_}); }

LinOp IdealModel::pointer_observable() const {
    return LinOp::diagonal(observer_, Eigen::Map<const Eigen::VectorXd>(
                                          spec_.betas.data(), static_cast<Eigen::Index>(spec_.betas.size())));
}

LinOp IdealModel::measured_observable() const {
    return LinOp::diagonal(system_, Eigen::Map<const Eigen::VectorXd>(
                                        spec_.alphas.data(), static_cast<Eigen::Index>(spec_.alphas.size())));
}

LinOp IdealModel::system_projector(int i) const {
    if (i < 1 || i > outcomes()) throw std::out_of_range("system_projector: outcome index out of range");
    return LinOp::basis_projector(system_, i - 1);
}

LinOp IdealModel::rotation_generator(int i) const {
    if (i < 1 || i > outcomes()) throw std::out_of_range("rotation_generator: outcome index out of range");
    const Eigen::Index d = observer_->dim();
    Matrix m = Matrix::Zero(d, d);
    const Complex ik(0.0, spec_.kappa());
    m(i, 0) = ik;    // i*kappa |beta_i><beta_0|
    m(0, i) = -ik;   // -i*kappa |beta_0><beta_i|
    return LinOp(ProductSpace(observer_), std::move(m));
}

LinOp IdealModel::outcome_rotation(int i) const {
    if (i < 1 || i > outcomes()) throw std::out_of_range("outcome_rotation: outcome index out of range");
    const Eigen::Index d = observer_->dim();
    const double theta = spec_.kappa() * spec_.tau;  // pi/2 by construction
    Matrix m = Matrix::Identity(d, d);
    m(0, 0) = std::cos(theta);
    m(i, i) = std::cos(theta);
    m(i, 0) = std::sin(theta);
    m(0, i) = -std::sin(theta);
    return LinOp(ProductSpace(observer_), std::move(m));
}

LinOp IdealModel::hamiltonian() const {
    LinOp h = LinOp::zero(joint_space());
    for (int i = 1; i <= outcomes(); ++i) h += kron(rotation_generator(i), system_projector(i));
    return h;
}

LinOp IdealModel::unitary() const {
    LinOp u = LinOp::zero(joint_space());
    for (int i = 1; i <= outcomes(); ++i) u += kron(outcome_rotation(i), system_projector(i));
    return u;
}

Ket IdealModel::initial_state() const {
    spec_.validate(true);
    return tensor(Ket::basis_state(ProductSpace(observer_), 0),
                  Ket(ProductSpace(system_), spec_.psi));
}

BranchWeightReport IdealModel::branch_weights() const {
    spec_.validate(true);
    BranchWeightReport report;
    double sum = 0.0;
    for (int i = 1; i <= outcomes(); ++i) {
        const double w = std::norm(spec_.psi(i - 1));
        report.entries.push_back({i, spec_.betas[static_cast<std::size_t>(i)], w});
        sum += w;
    }
    report.sum = sum;
    return report;
}

std::pair<LinOp, BranchDecomposition> IdealModel::evolved_pointer() const {
    const LinOp b = pointer_observable();
    const LinOp evolved = heisenberg_evolve(kron(b, LinOp::identity(ProductSpace(system_))), unitary());

    BranchDecomposition decomp;
    for (int i = 1; i <= outcomes(); ++i) {
        const LinOp u_i = outcome_rotation(i);
        decomp.branches.push_back({spec_.betas[static_cast<std::size_t>(i)],
                                   u_i.adjoint() * b * u_i, system_projector(i)});
    }
    return {evolved, std::move(decomp)};
}

}  // namespace everett
