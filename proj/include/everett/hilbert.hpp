#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "everett/tolerances.hpp"

namespace everett {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Entrywise max modulus; the norm used by all tolerance checks.
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

// A finite-dimensional state space with an ordered, labeled basis.
// Immutable; shared by reference between kets and operators.
class HilbertSpace {
public:
    HilbertSpace(std::string name, std::vector<std::string> basis_labels);

    const std::string& name() const { return name_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(labels_.size()); }
    const std::vector<std::string>& basis_labels() const { return labels_; }

private:
    std::string name_;
    std::vector<std::string> labels_;
};

using SpacePtr = std::shared_ptr<const HilbertSpace>;

SpacePtr make_space(std::string name, std::vector<std::string> basis_labels);
// Labels default to "0", "1", ..., dim-1.
SpacePtr make_space(std::string name, Eigen::Index dim);

// An ordered tensor product of labeled spaces. Factor order is part of the
// identity: permuted factors are a different space. Index arithmetic is
// row-major over the factor order (first factor varies slowest).
class ProductSpace {
public:
    explicit ProductSpace(SpacePtr single);
    explicit ProductSpace(std::vector<SpacePtr> factors);

    Eigen::Index dim() const { return dim_; }
    std::size_t factor_count() const { return factors_.size(); }
    const SpacePtr& factor(std::size_t i) const { return factors_.at(i); }
    const std::vector<SpacePtr>& factors() const { return factors_; }

    // Same factor sequence (name and dimension per slot, in order).
    bool same_as(const ProductSpace& other) const;

    // Position of the factor matching `f` by name and dimension.
    // Throws "unknown factor" when absent or ambiguous.
    std::size_t factor_position(const HilbertSpace& f) const;

    Eigen::Index flatten(std::span<const Eigen::Index> multi) const;
    std::vector<Eigen::Index> unflatten(Eigen::Index flat) const;

    // The product of the trailing factors [from, end); identity helper for
    // viewing a prefix/suffix split.
    ProductSpace slice(std::size_t from, std::size_t count) const;

    std::string describe() const;  // e.g. "O*S"

private:
    std::vector<SpacePtr> factors_;
    Eigen::Index dim_ = 1;
};

// A vector in a product space. `require_normalized` is the physical-state
// gate; intermediate vectors (projected states etc.) need not satisfy it.
class Ket {
public:
    Ket(ProductSpace space, Vector amps);

    static Ket basis_state(ProductSpace space, Eigen::Index k);

    const ProductSpace& space() const { return space_; }
    const Vector& amps() const { return amps_; }
    double squared_norm() const { return amps_.squaredNorm(); }

    bool is_normalized(double tol = Tolerances::defaults().state_norm) const;
    void require_normalized(double tol = Tolerances::defaults().state_norm) const;

private:
    ProductSpace space_;
    Vector amps_;
};

Ket tensor(const Ket& a, const Ket& b);

// A dense linear operator on a product space.
class LinOp {
public:
    LinOp(ProductSpace space, Matrix mat);

    static LinOp identity(ProductSpace space);
    static LinOp zero(ProductSpace space);
    // |k><k| on a single space.
    static LinOp basis_projector(SpacePtr space, Eigen::Index k);
    // Real diagonal operator from its spectrum in basis order.
    static LinOp diagonal(SpacePtr space, const Eigen::VectorXd& values);
    static LinOp diagonal(ProductSpace space, const Eigen::VectorXd& values);

    const ProductSpace& space() const { return space_; }
    const Matrix& mat() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }

    bool is_hermitian(double tol = Tolerances::defaults().hermitian) const;
    bool is_unitary(double tol = Tolerances::defaults().unitary) const;
    bool is_projector(double tol = Tolerances::defaults().projector) const;

    LinOp adjoint() const;

    LinOp& operator+=(const LinOp& other);
    LinOp& operator-=(const LinOp& other);
    friend LinOp operator+(LinOp a, const LinOp& b) { return a += b; }
    friend LinOp operator-(LinOp a, const LinOp& b) { return a -= b; }
    friend LinOp operator*(const Complex& c, const LinOp& a) {
        return LinOp(a.space_, c * a.mat_);
    }
    friend LinOp operator*(const LinOp& a, const LinOp& b);
    friend Ket operator*(const LinOp& a, const Ket& v);

private:
    ProductSpace space_;
    Matrix mat_;
};

// Kronecker product in the declared factor order; the factor lists of the
// two operands are concatenated.
LinOp kron(const LinOp& a, const LinOp& b);
LinOp kron_all(std::span<const LinOp> ops);

// 1 (x) ... (x) op (x) ... (x) 1 with `op` at the position of its (single)
// factor inside `space`. Throws "unknown factor" when the factor is absent.
LinOp embed(const LinOp& op, const ProductSpace& space);

// exp(-i h t) via spectral decomposition of the Hermitian generator.
// Throws "generator not Hermitian" when the check fails.
LinOp unitary_exp(const LinOp& h, double t,
                  const Tolerances& tol = Tolerances::defaults());

// u^dag o u. Throws on dimension mismatch or non-unitary u.
LinOp heisenberg_evolve(const LinOp& o, const LinOp& u,
                        const Tolerances& tol = Tolerances::defaults());

// <state| op |state> for a normalized state.
Complex expectation(const Ket& state, const LinOp& op,
                    const Tolerances& tol = Tolerances::defaults());

}  // namespace everett
