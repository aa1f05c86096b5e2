#include "everett/hilbert.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace everett {

const Tolerances& Tolerances::defaults() {
    static const Tolerances t{};
    return t;
}

Tolerances Tolerances::strict() {
    Tolerances t;
    t.weight_sum = 1e-12;
    t.cross_path = 1e-11;
    t.equivalence = 1e-13;
    return t;
}

double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: dimension mismatch");
    return max_abs(a - b);
}

HilbertSpace::HilbertSpace(std::string name, std::vector<std::string> basis_labels)
    : name_(std::move(name)), labels_(std::move(basis_labels)) {
    if (labels_.empty())
        throw std::invalid_argument("space '" + name_ + "': dimension must be >= 1");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_)
        if (!seen.insert(l).second)
            throw std::invalid_argument("space '" + name_ + "': duplicate basis label '" + l + "'");
}

SpacePtr make_space(std::string name, std::vector<std::string> basis_labels) {
    return std::make_shared<const HilbertSpace>(std::move(name), std::move(basis_labels));
}

SpacePtr make_space(std::string name, Eigen::Index dim) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) labels.push_back(std::to_string(k));
    return make_space(std::move(name), std::move(labels));
}

ProductSpace::ProductSpace(SpacePtr single) : ProductSpace(std::vector<SpacePtr>{std::move(single)}) {}

ProductSpace::ProductSpace(std::vector<SpacePtr> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("product space needs at least one factor");
    for (const auto& f : factors_) {
        if (!f) throw std::invalid_argument("product space: null factor");
        dim_ *= f->dim();
    }
}

bool ProductSpace::same_as(const ProductSpace& other) const {
    if (factors_.size() != other.factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto& a = *factors_[i];
        const auto& b = *other.factors_[i];
        if (a.name() != b.name() || a.dim() != b.dim()) return false;
    }
    return true;
}

std::size_t ProductSpace::factor_position(const HilbertSpace& f) const {
    std::size_t found = factors_.size();
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (factors_[i]->name() == f.name() && factors_[i]->dim() == f.dim()) {
            if (found != factors_.size())
                throw std::invalid_argument("unknown factor: '" + f.name() +
                                            "' is ambiguous in " + describe());
            found = i;
        }
    }
    if (found == factors_.size())
        throw std::invalid_argument("unknown factor: '" + f.name() + "' not in " + describe());
    return found;
}

Eigen::Index ProductSpace::flatten(std::span<const Eigen::Index> multi) const {
    if (multi.size() != factors_.size())
        throw std::invalid_argument("flatten: index arity mismatch");
    Eigen::Index flat = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const Eigen::Index d = factors_[i]->dim();
        if (multi[i] < 0 || multi[i] >= d) throw std::out_of_range("flatten: index out of range");
        flat = flat * d + multi[i];
    }
    return flat;
}

std::vector<Eigen::Index> ProductSpace::unflatten(Eigen::Index flat) const {
    if (flat < 0 || flat >= dim_) throw std::out_of_range("unflatten: index out of range");
    std::vector<Eigen::Index> multi(factors_.size());
    for (std::size_t i = factors_.size(); i-- > 0;) {
        const Eigen::Index d = factors_[i]->dim();
        multi[i] = flat % d;
        flat /= d;
    }
    return multi;
}

ProductSpace ProductSpace::slice(std::size_t from, std::size_t count) const {
    if (from + count > factors_.size() || count == 0)
        throw std::invalid_argument("slice: bad factor range");
    return ProductSpace(std::vector<SpacePtr>(factors_.begin() + static_cast<std::ptrdiff_t>(from),
                                              factors_.begin() + static_cast<std::ptrdiff_t>(from + count)));
}

std::string ProductSpace::describe() const {
    std::string s;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (i) s += "*";
        s += factors_[i]->name();
    }
    return s;
}

Ket::Ket(ProductSpace space, Vector amps) : space_(std::move(space)), amps_(std::move(amps)) {
    if (amps_.size() != space_.dim())
        throw std::invalid_argument("ket on " + space_.describe() + ": amplitude length mismatch");
}

Ket Ket::basis_state(ProductSpace space, Eigen::Index k) {
    if (k < 0 || k >= space.dim()) throw std::out_of_range("basis_state: index out of range");
    Vector v = Vector::Zero(space.dim());
    v(k) = 1.0;
    return Ket(std::move(space), std::move(v));
}

bool Ket::is_normalized(double tol) const { return std::abs(squared_norm() - 1.0) <= tol; }

void Ket::require_normalized(double tol) const {
    if (!is_normalized(tol))
        throw std::invalid_argument("state on " + space_.describe() +
                                    ": squared amplitudes must sum to 1 (got " +
                                    std::to_string(squared_norm()) + ")");
}

Ket tensor(const Ket& a, const Ket& b) {
    std::vector<SpacePtr> factors = a.space().factors();
    factors.insert(factors.end(), b.space().factors().begin(), b.space().factors().end());
    Vector v(a.amps().size() * b.amps().size());
    for (Eigen::Index i = 0; i < a.amps().size(); ++i)
        v.segment(i * b.amps().size(), b.amps().size()) = a.amps()(i) * b.amps();
    return Ket(ProductSpace(std::move(factors)), std::move(v));
}

LinOp::LinOp(ProductSpace space, Matrix mat) : space_(std::move(space)), mat_(std::move(mat)) {
    if (mat_.rows() != space_.dim() || mat_.cols() != space_.dim())
        throw std::invalid_argument("operator on " + space_.describe() + ": matrix shape mismatch");
}

LinOp LinOp::identity(ProductSpace space) {
    const Eigen::Index d = space.dim();
    return LinOp(std::move(space), Matrix::Identity(d, d));
}

LinOp LinOp::zero(ProductSpace space) {
    const Eigen::Index d = space.dim();
    return LinOp(std::move(space), Matrix::Zero(d, d));
}

LinOp LinOp::basis_projector(SpacePtr space, Eigen::Index k) {
    ProductSpace ps(std::move(space));
    const Eigen::Index d = ps.dim();
    if (k < 0 || k >= d) throw std::out_of_range("basis_projector: index out of range");
    Matrix m = Matrix::Zero(d, d);
    m(k, k) = 1.0;
    return LinOp(std::move(ps), std::move(m));
}

LinOp LinOp::diagonal(SpacePtr space, const Eigen::VectorXd& values) {
    return diagonal(ProductSpace(std::move(space)), values);
}

LinOp LinOp::diagonal(ProductSpace space, const Eigen::VectorXd& values) {
    if (values.size() != space.dim())
        throw std::invalid_argument("diagonal: value count mismatch on " + space.describe());
    Matrix m = values.cast<Complex>().asDiagonal();
    return LinOp(std::move(space), std::move(m));
}

bool LinOp::is_hermitian(double tol) const { return max_abs_diff(mat_, mat_.adjoint()) <= tol; }

bool LinOp::is_unitary(double tol) const {
    return max_abs(mat_.adjoint() * mat_ - Matrix::Identity(dim(), dim())) <= tol;
}

bool LinOp::is_projector(double tol) const {
    return is_hermitian() && max_abs(mat_ * mat_ - mat_) <= tol;
}

LinOp LinOp::adjoint() const { return LinOp(space_, mat_.adjoint()); }

LinOp& LinOp::operator+=(const LinOp& other) {
    if (!space_.same_as(other.space_))
        throw std::invalid_argument("operator sum: dimension mismatch (" + space_.describe() +
                                    " vs " + other.space_.describe() + ")");
    mat_ += other.mat_;
    return *this;
}

LinOp& LinOp::operator-=(const LinOp& other) {
    if (!space_.same_as(other.space_))
        throw std::invalid_argument("operator difference: dimension mismatch");
    mat_ -= other.mat_;
    return *this;
}

LinOp operator*(const LinOp& a, const LinOp& b) {
    if (!a.space_.same_as(b.space_))
        throw std::invalid_argument("operator product: dimension mismatch (" + a.space_.describe() +
                                    " vs " + b.space_.describe() + ")");
    return LinOp(a.space_, a.mat_ * b.mat_);
}

Ket operator*(const LinOp& a, const Ket& v) {
    if (a.dim() != v.amps().size())
        throw std::invalid_argument("operator application: dimension mismatch");
    return Ket(v.space(), a.mat() * v.amps());
}

LinOp kron(const LinOp& a, const LinOp& b) {
    std::vector<SpacePtr> factors = a.space().factors();
    factors.insert(factors.end(), b.space().factors().begin(), b.space().factors().end());
    Matrix m = Eigen::kroneckerProduct(a.mat(), b.mat());
    return LinOp(ProductSpace(std::move(factors)), std::move(m));
}

LinOp kron_all(std::span<const LinOp> ops) {
    if (ops.empty()) throw std::invalid_argument("kron_all: empty operand list");
    LinOp out = ops[0];
    for (std::size_t i = 1; i < ops.size(); ++i) out = kron(out, ops[i]);
    return out;
}

LinOp embed(const LinOp& op, const ProductSpace& space) {
    if (op.space().factor_count() != 1)
        throw std::invalid_argument("embed: operator must live on a single factor");
    const std::size_t pos = space.factor_position(*op.space().factor(0));

    Eigen::Index left = 1, right = 1;
    for (std::size_t i = 0; i < pos; ++i) left *= space.factor(i)->dim();
    for (std::size_t i = pos + 1; i < space.factor_count(); ++i) right *= space.factor(i)->dim();

    Matrix m = Eigen::kroneckerProduct(
        Matrix(Matrix::Identity(left, left)),
        Matrix(Eigen::kroneckerProduct(op.mat(), Matrix(Matrix::Identity(right, right)))));
    return LinOp(space, std::move(m));
}

LinOp unitary_exp(const LinOp& h, double t, const Tolerances& tol) {
    if (!h.is_hermitian(tol.hermitian))
        throw std::invalid_argument("generator not Hermitian (deviation " +
                                    std::to_string(max_abs_diff(h.mat(), h.mat().adjoint())) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat());
    if (es.info() != Eigen::Success) throw std::runtime_error("unitary_exp: eigensolver failed");
    const Eigen::VectorXd& lambda = es.eigenvalues();
    Vector phases(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k)
        phases(k) = std::exp(Complex(0.0, -lambda(k) * t));
    Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    return LinOp(h.space(), std::move(u));
}

LinOp heisenberg_evolve(const LinOp& o, const LinOp& u, const Tolerances& tol) {
    if (!o.space().same_as(u.space()))
        throw std::invalid_argument("heisenberg_evolve: dimension mismatch (" +
                                    o.space().describe() + " vs " + u.space().describe() + ")");
    if (!u.is_unitary(tol.unitary)) throw std::invalid_argument("heisenberg_evolve: evolution operator not unitary");
    return LinOp(o.space(), u.mat().adjoint() * o.mat() * u.mat());
}

Complex expectation(const Ket& state, const LinOp& op, const Tolerances& tol) {
    if (state.amps().size() != op.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    state.require_normalized(tol.state_norm);
    return (state.amps().adjoint() * op.mat() * state.amps())(0);
}

}  // namespace everett
