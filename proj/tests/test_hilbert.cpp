#include <doctest.h>

#include <random>

#include "everett/hilbert.hpp"
#include "support/random_specs.hpp"

using namespace everett;

namespace {

// Brute-force Kronecker product straight from the index definition.
Matrix kron_brute_force(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

}  // namespace

TEST_CASE("kron: identities and projectors") {
    const auto a = make_space("A", 2);
    const auto b = make_space("B", 3);
    const LinOp id_a = LinOp::identity(ProductSpace(a));
    const LinOp id_b = LinOp::identity(ProductSpace(b));

    const LinOp joint = kron(id_a, id_b);
    CHECK(joint.dim() == 6);
    CHECK(max_abs_diff(joint.mat(), Matrix::Identity(6, 6)) == 0.0);

    const LinOp p = LinOp::basis_projector(a, 0);
    const LinOp q = LinOp::basis_projector(b, 2);
    CHECK(kron(p, q).is_projector());
}

TEST_CASE("kron: matches the brute-force definition on random Hermitians") {
    std::mt19937_64 rng(11);
    const auto a = make_space("A", 2);
    const auto b = make_space("B", 2);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix ma = testing::random_hermitian(2, rng);
        const Matrix mb = testing::random_hermitian(2, rng);
        const LinOp k = kron(LinOp(ProductSpace(a), ma), LinOp(ProductSpace(b), mb));
        CHECK(max_abs_diff(k.mat(), kron_brute_force(ma, mb)) == 0.0);
    }
}

TEST_CASE("kron: associativity under the induced index map") {
    std::mt19937_64 rng(12);
    const auto a = make_space("A", 2);
    const auto b = make_space("B", 3);
    const auto c = make_space("C", 2);
    const LinOp oa(ProductSpace(a), testing::random_hermitian(2, rng));
    const LinOp ob(ProductSpace(b), testing::random_hermitian(3, rng));
    const LinOp oc(ProductSpace(c), testing::random_hermitian(2, rng));
    CHECK(max_abs_diff(kron(kron(oa, ob), oc).mat(), kron(oa, kron(ob, oc)).mat()) <= 1e-15);
}

TEST_CASE("embed: identity, commutation, and direct action") {
    const auto a = make_space("A", 2);
    const auto b = make_space("B", 3);
    const auto c = make_space("C", 2);
    const ProductSpace abc({a, b, c});

    CHECK(max_abs_diff(embed(LinOp::identity(ProductSpace(b)), abc).mat(),
                       Matrix::Identity(12, 12)) == 0.0);

    std::mt19937_64 rng(13);
    const LinOp ea = embed(LinOp(ProductSpace(a), testing::random_hermitian(2, rng)), abc);
    const LinOp ec = embed(LinOp(ProductSpace(c), testing::random_hermitian(2, rng)), abc);
    CHECK(max_abs(((ea * ec) - (ec * ea)).mat()) <= 1e-12);

    // embedding a projector onto an occupied slot leaves the matching basis
    // state untouched
    const ProductSpace ab({a, b});
    const LinOp proj = embed(LinOp::basis_projector(b, 1), ab);
    const Ket ket = tensor(Ket::basis_state(ProductSpace(a), 0), Ket::basis_state(ProductSpace(b), 1));
    const Ket mapped = proj * ket;
    CHECK((mapped.amps() - ket.amps()).norm() == 0.0);

    CHECK_THROWS_WITH_AS(embed(LinOp::identity(ProductSpace(make_space("D", 4))), abc),
                         doctest::Contains("unknown factor"), std::invalid_argument);
}

TEST_CASE("unitary_exp: trivial generator, group inverse, rotation") {
    const auto a = make_space("A", 3);
    const LinOp zero = LinOp::zero(ProductSpace(a));
    CHECK(max_abs_diff(unitary_exp(zero, 0.7).mat(), Matrix::Identity(3, 3)) <= 1e-15);

    std::mt19937_64 rng(14);
    const LinOp h(ProductSpace(a), testing::random_hermitian(3, rng));
    const LinOp u = unitary_exp(h, 0.9);
    const LinOp v = unitary_exp(h, -0.9);
    CHECK(u.is_unitary(1e-10));
    CHECK(max_abs_diff((u * v).mat(), Matrix::Identity(3, 3)) <= 1e-10);

    // the ready-state rotation generator sends |0> to |target| at kappa*t = pi/2
    const double kappa = std::numbers::pi / 2.0;
    Matrix gen = Matrix::Zero(3, 3);
    gen(2, 0) = Complex(0, kappa);
    gen(0, 2) = Complex(0, -kappa);
    const LinOp rot = unitary_exp(LinOp(ProductSpace(a), gen), 1.0);
    Vector expected = Vector::Zero(3);
    expected(2) = 1.0;
    CHECK((rot.mat().col(0) - expected).norm() <= 1e-12);

    Matrix skew = Matrix::Zero(3, 3);
    skew(0, 1) = 1.0;  // not Hermitian
    CHECK_THROWS_WITH_AS(unitary_exp(LinOp(ProductSpace(a), skew), 1.0),
                         doctest::Contains("generator not Hermitian"), std::invalid_argument);
}

TEST_CASE("heisenberg_evolve: identities, spectrum preservation, errors") {
    std::mt19937_64 rng(15);
    const auto a = make_space("A", 4);
    const ProductSpace sp(a);
    const LinOp o(sp, testing::random_hermitian(4, rng));

    CHECK(max_abs_diff(heisenberg_evolve(o, LinOp::identity(sp)).mat(), o.mat()) == 0.0);

    const LinOp u = unitary_exp(LinOp(sp, testing::random_hermitian(4, rng)), 1.3);
    CHECK(max_abs_diff(heisenberg_evolve(LinOp::identity(sp), u).mat(),
                       Matrix::Identity(4, 4)) <= 1e-12);

    const LinOp evolved = heisenberg_evolve(o, u);
    CHECK(evolved.is_hermitian(1e-12));
    Eigen::SelfAdjointEigenSolver<Matrix> before(o.mat(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> after(evolved.mat(), Eigen::EigenvaluesOnly);
    CHECK((before.eigenvalues() - after.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-8);

    const LinOp small = LinOp::identity(ProductSpace(make_space("B", 2)));
    CHECK_THROWS_AS(heisenberg_evolve(o, small), std::invalid_argument);
}

TEST_CASE("expectation: identity, orthonormal projectors, brute force") {
    std::mt19937_64 rng(16);
    const auto s = make_space("S", 4);
    const ProductSpace sp(s);
    const Ket psi(sp, testing::random_state(4, rng));

    CHECK(expectation(psi, LinOp::identity(sp)).real() == doctest::Approx(1.0).epsilon(1e-14));

    const Ket basis1 = Ket::basis_state(sp, 1);
    CHECK(expectation(basis1, LinOp::basis_projector(s, 1)).real() == doctest::Approx(1.0));
    CHECK(std::abs(expectation(basis1, LinOp::basis_projector(s, 2))) <= 1e-15);

    const LinOp m(sp, testing::random_hermitian(4, rng));
    Complex brute(0.0, 0.0);
    for (Eigen::Index j = 0; j < 4; ++j)
        for (Eigen::Index k = 0; k < 4; ++k)
            brute += std::conj(psi.amps()(j)) * m.mat()(j, k) * psi.amps()(k);
    CHECK(std::abs(expectation(psi, m) - brute) <= 1e-14);
    CHECK(std::abs(expectation(psi, m).imag()) <= 1e-12);
}

TEST_CASE("expectation of any projector stays inside [0, 1]") {
    std::mt19937_64 rng(17);
    const auto s = make_space("S", 5);
    const ProductSpace sp(s);
    for (int trial = 0; trial < 50; ++trial) {
        const Ket psi(sp, testing::random_state(5, rng));
        // random projector: rotate a coordinate projector of random rank
        const Matrix u = testing::random_unitary(5, rng);
        const int rank = 1 + static_cast<int>(rng() % 4);
        Matrix diag = Matrix::Zero(5, 5);
        for (int r = 0; r < rank; ++r) diag(r, r) = 1.0;
        const LinOp proj(sp, u * diag * u.adjoint());
        REQUIRE(proj.is_projector(1e-10));
        const double value = expectation(psi, proj).real();
        CHECK(value >= -1e-12);
        CHECK(value <= 1.0 + 1e-12);
    }
}

TEST_CASE("product space index arithmetic is row-major and bijective") {
    const ProductSpace sp({make_space("A", 2), make_space("B", 3), make_space("C", 2)});
    CHECK(sp.dim() == 12);
    for (Eigen::Index flat = 0; flat < sp.dim(); ++flat) {
        const auto multi = sp.unflatten(flat);
        CHECK(sp.flatten(multi) == flat);
    }
    const std::vector<Eigen::Index> idx = {1, 2, 0};
    CHECK(sp.flatten(idx) == 1 * 6 + 2 * 2 + 0);

    // permuted factors are a different space
    const ProductSpace swapped({make_space("B", 3), make_space("A", 2), make_space("C", 2)});
    CHECK(!sp.same_as(swapped));
}

TEST_CASE("space and state validation") {
    CHECK_THROWS_AS(make_space("bad", std::vector<std::string>{"x", "x"}), std::invalid_argument);
    const auto s = make_space("S", 2);
    Vector v(2);
    v << 0.9, 0.0;
    CHECK_FALSE(Ket(ProductSpace(s), v).is_normalized());
    CHECK_THROWS_AS(Ket(ProductSpace(s), v).require_normalized(), std::invalid_argument);
}
