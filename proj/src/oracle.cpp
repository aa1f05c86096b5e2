#include "everett/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "everett/summation.hpp"

namespace everett {

namespace {

// Everything below is assembled directly from the spec so that the oracle
// stays independent of the model classes it cross-checks.

Matrix ready_state_generator(Eigen::Index dim, Eigen::Index target, double kappa) {
    Matrix h = Matrix::Zero(dim, dim);
    h(target, 0) = Complex(0.0, kappa);
    h(0, target) = Complex(0.0, -kappa);
    return h;
}

Matrix ideal_hamiltonian_matrix(const IdealModelSpec& spec) {
    const Eigen::Index d_o = spec.outcome_count + 1;
    const Eigen::Index d_s = spec.outcome_count;
    Matrix h = Matrix::Zero(d_o * d_s, d_o * d_s);
    for (int i = 1; i <= spec.outcome_count; ++i) {
        const Matrix hi = ready_state_generator(d_o, i, spec.kappa());
        for (Eigen::Index r = 0; r < d_o; ++r)
            for (Eigen::Index c = 0; c < d_o; ++c)
                h(r * d_s + (i - 1), c * d_s + (i - 1)) += hi(r, c);
    }
    return h;
}

int ball_indicator(const Eigen::VectorXd& delta, double radius, BallBoundary boundary) {
    const double dist = delta.norm();
    return (boundary == BallBoundary::Closed ? dist <= radius : dist < radius) ? 1 : 0;
}

double projected_probability(const Vector& state, Eigen::Index block, Eigen::Index block_size) {
    return state.segment(block * block_size, block_size).squaredNorm();
}

}  // namespace

double OracleResult::sum() const {
    KahanSum s;
    for (const double p : probabilities) s.add(p);
    return s.value();
}

OracleResult oracle_ideal(const IdealModelSpec& spec) {
    spec.validate(true);
    const Eigen::Index d_o = spec.outcome_count + 1;
    const Eigen::Index d_s = spec.outcome_count;

    const SpacePtr obs = make_space("O", d_o);
    const SpacePtr sys = make_space("S", d_s);
    const ProductSpace joint({obs, sys});

    const LinOp h(joint, ideal_hamiltonian_matrix(spec));
    const LinOp u = unitary_exp(h, spec.tau);

    Vector state = Vector::Zero(joint.dim());
    for (int i = 0; i < spec.outcome_count; ++i) state(i) = spec.psi(i);  // observer slot 0
    state = u.mat() * state;

    OracleResult out;
    for (Eigen::Index o = 0; o < d_o; ++o)
        out.probabilities.push_back(projected_probability(state, o, d_s));
    return out;
}

OracleResult oracle_spatial(const SpatialModelSpec& spec) {
    spec.validate();
    const int m = spec.ideal.outcome_count;
    const Eigen::Index d_o = m + 1;
    const Eigen::Index d_s = m;
    const Eigen::Index nz = spec.grid_z.point_count();
    const Eigen::Index nx = spec.grid_x.point_count();
    const Eigen::Index dim = d_o * d_s * nz * nx;
    if (dim > kOperatorPathDimCap)
        throw std::invalid_argument("oracle_spatial: dimension " + std::to_string(dim) +
                                    " exceeds the operator-path cap");

    const SpacePtr obs = make_space("O", d_o);
    const SpacePtr sys = make_space("S", d_s);
    const SpacePtr zsp = make_space("Z", nz);
    const SpacePtr xsp = make_space("X", nx);
    const ProductSpace full({obs, sys, zsp, xsp});

    // H = H_ideal (x) P_f assembled entry by entry over the diagonal mask.
    const Matrix h_ideal = ideal_hamiltonian_matrix(spec.ideal);
    Matrix h = Matrix::Zero(dim, dim);
    const Eigen::Index zx = nz * nx;
    for (Eigen::Index zi = 0; zi < nz; ++zi)
        for (Eigen::Index xi = 0; xi < nx; ++xi) {
            if (!ball_indicator(spec.grid_z.point(zi) - spec.grid_x.point(xi), spec.radius,
                                spec.boundary))
                continue;
            const Eigen::Index g = zi * nx + xi;
            for (Eigen::Index r = 0; r < d_o * d_s; ++r)
                for (Eigen::Index c = 0; c < d_o * d_s; ++c)
                    h(r * zx + g, c * zx + g) = h_ideal(r, c);
        }

    const LinOp u = unitary_exp(LinOp(full, std::move(h)), spec.ideal.tau);

    Vector state = Vector::Zero(dim);
    for (int s = 0; s < m; ++s)
        for (Eigen::Index zi = 0; zi < nz; ++zi)
            for (Eigen::Index xi = 0; xi < nx; ++xi)
                state((static_cast<Eigen::Index>(s) * nz + zi) * nx + xi) =
                    spec.psi_z(zi) * spec.psi_xs(s, xi);
    state = u.mat() * state;

    OracleResult out;
    for (Eigen::Index o = 0; o < d_o; ++o)
        out.probabilities.push_back(projected_probability(state, o, d_s * zx));
    return out;
}

OracleResult oracle_multi(const MultiObserverSpec& spec) {
    spec.validate();
    const int m = spec.ideal.outcome_count;
    const Eigen::Index d_o = m + 1;
    const Eigen::Index d_g = (m + 1) * (m + 1) + 1;
    const Eigen::Index d_s = m;
    const Eigen::Index nz = spec.grid_z.point_count();
    const Eigen::Index nx = spec.grid_x.point_count();
    const Eigen::Index zx = nz * nx;
    const Eigen::Index dim = d_g * d_o * d_o * d_s * zx;
    if (dim > kOperatorPathDimCap)
        throw std::invalid_argument("oracle_multi: dimension " + std::to_string(dim) +
                                    " exceeds the operator-path cap");

    const SpacePtr ver = make_space("G", d_g);
    const SpacePtr ob1 = make_space("O1", d_o);
    const SpacePtr ob2 = make_space("O2", d_o);
    const SpacePtr sys = make_space("S", d_s);
    const SpacePtr zsp = make_space("Z", nz);
    const SpacePtr xsp = make_space("X", nx);
    const ProductSpace full({ver, ob1, ob2, sys, zsp, xsp});

    // Gated measurement Hamiltonian of observer p, assembled per basis pair.
    const auto observer_hamiltonian = [&](int p) {
        const double kappa = spec.kappa(p);
        const double radius = p == 1 ? spec.radius1 : spec.radius2;
        const Eigen::VectorXd& offset = p == 1 ? spec.offset1 : spec.offset2;

        Matrix h = Matrix::Zero(dim, dim);
        for (int i = 1; i <= m; ++i) {
            const Matrix hi = ready_state_generator(d_o, i, kappa);
            const Eigen::Index s = i - 1;
            for (Eigen::Index zi = 0; zi < nz; ++zi)
                for (Eigen::Index xi = 0; xi < nx; ++xi) {
                    const Eigen::VectorXd displaced = spec.grid_z.point(zi) + offset;
                    if (!ball_indicator(spec.grid_x.point(xi) - displaced, radius, spec.boundary))
                        continue;
                    const Eigen::Index g = zi * nx + xi;
                    for (Eigen::Index r = 0; r < d_o; ++r)
                        for (Eigen::Index c = 0; c < d_o; ++c) {
                            if (hi(r, c) == Complex(0.0, 0.0)) continue;
                            for (Eigen::Index gv = 0; gv < d_g; ++gv)
                                for (Eigen::Index other = 0; other < d_o; ++other) {
                                    // row/col indices with observer p at its slot
                                    const Eigen::Index o1r = p == 1 ? r : other;
                                    const Eigen::Index o1c = p == 1 ? c : other;
                                    const Eigen::Index o2r = p == 2 ? r : other;
                                    const Eigen::Index o2c = p == 2 ? c : other;
                                    const Eigen::Index row =
                                        (((gv * d_o + o1r) * d_o + o2r) * d_s + s) * zx + g;
                                    const Eigen::Index col =
                                        (((gv * d_o + o1c) * d_o + o2c) * d_s + s) * zx + g;
                                    h(row, col) += hi(r, c);
                                }
                        }
                }
        }
        return LinOp(full, std::move(h));
    };

    // Verifier Hamiltonian: one ready-state rotation per observed pair.
    const auto verifier_hamiltonian = [&] {
        Matrix h = Matrix::Zero(dim, dim);
        const Eigen::Index rest = d_s * zx;
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) {
                const Eigen::Index target = 1 + static_cast<Eigen::Index>(i) * (m + 1) + j;
                const Matrix hg = ready_state_generator(d_g, target, spec.kappa_g());
                for (Eigen::Index r = 0; r < d_g; ++r)
                    for (Eigen::Index c = 0; c < d_g; ++c) {
                        if (hg(r, c) == Complex(0.0, 0.0)) continue;
                        for (Eigen::Index k = 0; k < rest; ++k) {
                            const Eigen::Index row = (((r * d_o + i) * d_o + j) * rest) + k;
                            const Eigen::Index col = (((c * d_o + i) * d_o + j) * rest) + k;
                            h(row, col) += hg(r, c);
                        }
                    }
            }
        return LinOp(full, std::move(h));
    };

    const LinOp u1 = unitary_exp(observer_hamiltonian(1), spec.tau1);
    const LinOp u2 = unitary_exp(observer_hamiltonian(2), spec.tau2);
    const LinOp ug = unitary_exp(verifier_hamiltonian(), spec.tau_g);

    Vector state = Vector::Zero(dim);
    for (int s = 0; s < m; ++s)
        for (Eigen::Index zi = 0; zi < nz; ++zi)
            for (Eigen::Index xi = 0; xi < nx; ++xi)
                state((static_cast<Eigen::Index>(s) * nz + zi) * nx + xi) =
                    spec.psi_z(zi) * spec.psi_xs(s, xi);
    state = ug.mat() * (u2.mat() * (u1.mat() * state));

    // Row-major (i,j) probabilities read off the verifier's outcome blocks.
    OracleResult out;
    const Eigen::Index block = d_o * d_o * d_s * zx;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            const Eigen::Index gv = 1 + static_cast<Eigen::Index>(i) * (m + 1) + j;
            out.probabilities.push_back(projected_probability(state, gv, block));
        }
    return out;
}

}  // namespace everett
