#include "everett/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace everett {

namespace {

// Partial matrix element over the observer factor: <ref| op |ref> as an
// operator on the label side.
Matrix label_side_operator(const ExtractionInput& input) {
    const Eigen::Index d_obs = input.observer_dim();
    const Eigen::Index d_lab = input.label_dim();
    const Vector& r = input.ref_ket.amps();

    Matrix v = Matrix::Zero(d_lab, d_lab);
    for (Eigen::Index o = 0; o < d_obs; ++o)
        for (Eigen::Index op2 = 0; op2 < d_obs; ++op2) {
            const Complex c = std::conj(r(o)) * r(op2);
            if (c == Complex(0.0, 0.0)) continue;
            v += c * input.op.mat().block(o * d_lab, op2 * d_lab, d_lab, d_lab);
        }
    return v;
}

// Block (o, o') of op * (1 (x) Q), traced against Q; divided by rank this is
// the least-squares observer matrix element.
Matrix recover_observer_op(const Matrix& op, const Matrix& q, Eigen::Index d_obs,
                           Eigen::Index d_lab) {
    const double rank = q.trace().real();
    Matrix b(d_obs, d_obs);
    for (Eigen::Index o = 0; o < d_obs; ++o)
        for (Eigen::Index o2 = 0; o2 < d_obs; ++o2) {
            const Matrix block = op.block(o * d_lab, o2 * d_lab, d_lab, d_lab);
            b(o, o2) = (q * block * q).trace() / rank;
        }
    return b;
}

struct Cluster {
    double beta = 0.0;           // mean of the clustered eigenvalues
    std::vector<Eigen::Index> members;
};

std::vector<Cluster> cluster_eigenvalues(const Eigen::VectorXd& values, double eps) {
    // values come sorted ascending from the self-adjoint eigensolver
    std::vector<Cluster> clusters;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (clusters.empty() || values(k) - values(clusters.back().members.back()) > eps) {
            clusters.push_back({values(k), {k}});
        } else {
            clusters.back().members.push_back(k);
        }
    }
    for (auto& c : clusters) {
        double sum = 0.0;
        for (const Eigen::Index k : c.members) sum += values(k);
        c.beta = sum / static_cast<double>(c.members.size());
    }
    return clusters;
}

}  // namespace

void ExtractionInput::validate(const Tolerances& tol) const {
    if (op.space().factor_count() < 2)
        throw std::invalid_argument("extraction input must live on at least two factors");
    if (!op.is_hermitian(tol.hermitian))
        throw std::invalid_argument("extraction input operator must be Hermitian");
    if (ref_ket.amps().size() != observer_dim())
        throw std::invalid_argument("reference ket must live on the observer factor");
    ref_ket.require_normalized(tol.state_norm);
    if (expected_branch_count < 1)
        throw std::invalid_argument("expected branch count must be >= 1");
}

Eigen::Index ExtractionInput::observer_dim() const { return op.space().factor(0)->dim(); }

Eigen::Index ExtractionInput::label_dim() const { return op.dim() / observer_dim(); }

ExtractedDecomposition extract_decomposition(const ExtractionInput& input, const Tolerances& tol) {
    input.validate(tol);
    const Eigen::Index d_obs = input.observer_dim();
    const Eigen::Index d_lab = input.label_dim();

    const Matrix v = label_side_operator(input);
    if (max_abs_diff(v, v.adjoint()) > tol.hermitian)
        throw std::runtime_error("label-side reduction is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    if (es.info() != Eigen::Success) throw std::runtime_error("extraction eigensolver failed");

    const std::vector<Cluster> clusters = cluster_eigenvalues(es.eigenvalues(), tol.cluster);
    if (static_cast<int>(clusters.size()) != input.expected_branch_count)
        throw std::runtime_error("branch count mismatch: clustering found " +
                                 std::to_string(clusters.size()) + " branches, expected " +
                                 std::to_string(input.expected_branch_count));

    ExtractedDecomposition out;
    Matrix reassembled = Matrix::Zero(input.op.dim(), input.op.dim());
    Matrix projector_sum = Matrix::Zero(d_lab, d_lab);
    for (const Cluster& c : clusters) {
        Matrix q = Matrix::Zero(d_lab, d_lab);
        for (const Eigen::Index k : c.members) {
            const Vector col = es.eigenvectors().col(k);
            q += col * col.adjoint();
        }
        Matrix b = recover_observer_op(input.op.mat(), q, d_obs, d_lab);

        for (Eigen::Index o = 0; o < d_obs; ++o)
            for (Eigen::Index o2 = 0; o2 < d_obs; ++o2)
                reassembled.block(o * d_lab, o2 * d_lab, d_lab, d_lab) += b(o, o2) * q;
        projector_sum += q;
        out.branches.push_back({c.beta, std::move(b), std::move(q)});
    }
    out.residual = max_abs_diff(input.op.mat(), reassembled);

    if (out.residual > tol.residual)
        throw std::runtime_error("not of product-decomposable form: reassembly residual " +
                                 std::to_string(out.residual));
    if (max_abs(projector_sum - Matrix::Identity(d_lab, d_lab)) > tol.projector)
        throw std::runtime_error("extracted projectors do not sum to the identity");
    for (std::size_t i = 0; i < out.branches.size(); ++i) {
        const Matrix& qi = out.branches[i].projector;
        if (max_abs(qi * qi - qi) > tol.projector)
            throw std::runtime_error("extracted branch " + std::to_string(i) +
                                     " coefficient is not a projector");
        if (qi.trace().real() < 0.5)
            throw std::runtime_error("extracted branch " + std::to_string(i) + " projector is zero");
        for (std::size_t j = i + 1; j < out.branches.size(); ++j)
            if (max_abs(qi * out.branches[j].projector) > tol.projector)
                throw std::runtime_error("extracted projectors " + std::to_string(i) + " and " +
                                         std::to_string(j) + " are not orthogonal");
    }
    // clusters arrive sorted by eigenvalue, so branches are already ascending
    return out;
}

UniquenessReport verify_uniqueness(const ExtractionInput& input, int trials, std::uint64_t seed,
                                   const Tolerances& tol) {
    const ExtractedDecomposition base = extract_decomposition(input, tol);
    const Eigen::Index d_obs = input.observer_dim();
    const Eigen::Index d_lab = input.label_dim();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    UniquenessReport report;
    report.trials = trials;
    report.pass = true;

    for (int t = 0; t < trials; ++t) {
        // Adversarial second expansion: shuffle the branch order and remix
        // each eigenspace basis, then rebuild the operator from scratch.
        std::vector<std::size_t> order(base.branches.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);

        Matrix rebuilt = Matrix::Zero(input.op.dim(), input.op.dim());
        for (const std::size_t idx : order) {
            const ExtractedBranch& br = base.branches[idx];

            // Orthonormal basis of the projector's range, rotated by a random
            // unitary; the rebuilt projector spans the same subspace.
            Eigen::SelfAdjointEigenSolver<Matrix> qes(br.projector);
            const Eigen::Index rank = static_cast<Eigen::Index>(std::lround(br.projector.trace().real()));
            Matrix basis = qes.eigenvectors().rightCols(rank);
            Matrix noise(rank, rank);
            for (Eigen::Index r = 0; r < rank; ++r)
                for (Eigen::Index c = 0; c < rank; ++c) noise(r, c) = Complex(gauss(rng), gauss(rng));
            const Matrix mix = Eigen::HouseholderQR<Matrix>(noise).householderQ();
            basis = basis * mix;
            const Matrix q = basis * basis.adjoint();

            for (Eigen::Index o = 0; o < d_obs; ++o)
                for (Eigen::Index o2 = 0; o2 < d_obs; ++o2)
                    rebuilt.block(o * d_lab, o2 * d_lab, d_lab, d_lab) += br.observer_op(o, o2) * q;
        }

        ExtractionInput trial_input{LinOp(input.op.space(), std::move(rebuilt)), input.ref_ket,
                                    input.expected_branch_count};
        const ExtractedDecomposition redone = extract_decomposition(trial_input, tol);

        // Both lists are beta-ascending, so permutation freedom reduces to
        // positionwise comparison.
        for (std::size_t i = 0; i < base.branches.size(); ++i) {
            const double beta_dev = std::abs(redone.branches[i].beta - base.branches[i].beta);
            const double proj_dev =
                max_abs_diff(redone.branches[i].projector, base.branches[i].projector);
            report.worst_beta_deviation = std::max(report.worst_beta_deviation, beta_dev);
            report.worst_projector_deviation = std::max(report.worst_projector_deviation, proj_dev);
            if (beta_dev > tol.cluster || proj_dev > tol.cluster) report.pass = false;
        }
    }
    return report;
}

}  // namespace everett
