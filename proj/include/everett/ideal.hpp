#pragma once

#include <utility>
#include <vector>

#include "everett/hilbert.hpp"

namespace everett {

// Parameters of an ideal measurement: an observer with pointer eigenvalues
// beta_0..beta_M (beta_0 = ready/ignorance) coupled to a system with
// nondegenerate eigenvalues alpha_1..alpha_M for a coupling time tau.
struct IdealModelSpec {
    int outcome_count = 0;          // M
    std::vector<double> alphas;     // size M, pairwise distinct
    std::vector<double> betas;      // size M+1, index 0 = ready state
    double tau = 1.0;               // coupling duration, > 0
    Vector psi;                     // system amplitudes, size M

    // Coupling strength fixed by the quarter-period condition kappa*tau = pi/2.
    double kappa() const;

    // check_state=false skips the psi normalization gate; composed models
    // carry their own joint wavefunctions and do not read psi.
    void validate(bool check_state = true,
                  const Tolerances& tol = Tolerances::defaults()) const;
};

struct BranchWeightEntry {
    int branch = 0;      // outcome index (0 = no measurement where applicable)
    double eigenvalue = 0.0;
    double weight = 0.0;
};

struct BranchWeightReport {
    std::vector<BranchWeightEntry> entries;
    double sum = 0.0;

    double weight_of(int branch) const;
    // Enforces weight range and sum-to-one.
    void require_valid(const Tolerances& tol = Tolerances::defaults()) const;
};

// One term of a pointer-operator expansion: eigenvalue, the rotated observer
// operator, and the projector label that tags the branch.
struct Branch {
    double eigenvalue = 0.0;
    LinOp observer_op;
    LinOp label;
};

struct BranchDecomposition {
    std::vector<Branch> branches;
};

class IdealModel {
public:
    explicit IdealModel(IdealModelSpec spec);

    const IdealModelSpec& spec() const { return spec_; }
    int outcomes() const { return spec_.outcome_count; }

    SpacePtr observer_space() const { return observer_; }  // dim M+1
    SpacePtr system_space() const { return system_; }      // dim M
    ProductSpace joint_space() const;                      // observer * system

    // Pointer observable on the observer space: diag(beta_0..beta_M).
    LinOp pointer_observable() const;
    // Measured observable on the system space: diag(alpha_1..alpha_M).
    LinOp measured_observable() const;
    // Projector onto the i-th measured state, i = 1..M.
    LinOp system_projector(int i) const;

    // Generator rotating the ready state toward outcome i:
    // i*kappa*(|beta_i><beta_0| - |beta_0><beta_i|).
    LinOp rotation_generator(int i) const;
    // Closed-form rotation exp(-i * generator * tau) in span{|beta_0>,|beta_i>}.
    LinOp outcome_rotation(int i) const;

    // Interaction Hamiltonian sum_i generator_i (x) projector_i.
    LinOp hamiltonian() const;
    // Evolution operator sum_i rotation_i (x) projector_i (closed form).
    LinOp unitary() const;

    // |beta_0> (x) sum_i psi_i |alpha_i>.
    Ket initial_state() const;

    // W_i = |psi_i|^2, i = 1..M.
    BranchWeightReport branch_weights() const;

    // Evolved pointer operator and its branch expansion
    // {(beta_i, rotated pointer, system projector)}.
    std::pair<LinOp, BranchDecomposition> evolved_pointer() const;

private:
    IdealModelSpec spec_;
    SpacePtr observer_;
    SpacePtr system_;
};

}  // namespace everett
