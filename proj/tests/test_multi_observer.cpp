#include <doctest.h>

#include <random>
#include <set>

#include "everett/multi_observer.hpp"
#include "everett/oracle.hpp"
#include "support/random_specs.hpp"

using namespace everett;

namespace {

// Two observers over system points {0, 3}: observer 1 reaches point 0,
// observer 2 reaches point 3, regions disjoint.
MultiObserverSpec separated_spec() {
    MultiObserverSpec spec;
    spec.ideal.outcome_count = 2;
    spec.ideal.alphas = {1.0, 2.0};
    spec.ideal.betas = {0.0, 1.0, 2.0};
    spec.grid_x = SpatialGrid(1, 2, 3.0);  // points 0, 3
    spec.grid_z = SpatialGrid(1, 1, 1.0);  // observer platform pinned at 0
    spec.radius1 = 1.0;
    spec.radius2 = 1.0;
    spec.offset1 = Eigen::VectorXd::Zero(1);
    spec.offset2 = Eigen::VectorXd::Constant(1, 3.0);
    spec.psi_xs = Eigen::MatrixXcd(2, 2);
    spec.psi_xs << std::sqrt(0.3), std::sqrt(0.2), std::sqrt(0.1), std::sqrt(0.4);
    spec.psi_z = Vector(1);
    spec.psi_z << 1.0;
    return spec;
}

MultiObserverSpec single_point_spec() {
    MultiObserverSpec spec = separated_spec();
    spec.grid_x = SpatialGrid(1, 1, 1.0);  // only xi = 0
    spec.offset2 = Eigen::VectorXd::Zero(1);
    spec.psi_xs = Eigen::MatrixXcd(2, 1);
    spec.psi_xs << std::sqrt(0.3), std::sqrt(0.7);
    return spec;
}

}  // namespace

TEST_CASE("joint outcome index map is injective with a working inverse") {
    const GIndexMap map(3);
    CHECK(map.state_count() == 17);
    std::set<int> seen;
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) {
            const int I = map.index_of(i, j);
            CHECK(I >= 1);
            CHECK(I <= 16);
            CHECK(seen.insert(I).second);
            CHECK(map.outcome_pair(I) == std::pair<int, int>{i, j});
        }
    CHECK_THROWS_AS(map.outcome_pair(0), std::out_of_range);
    CHECK_THROWS_AS(map.outcome_pair(17), std::out_of_range);
}

TEST_CASE("offset range indicator") {
    MultiObserverSpec spec = separated_spec();
    const MultiObserverModel model(spec);

    // observer 1 at the platform origin behaves like the plain indicator
    CHECK(model.in_range(1, 0, 0) == 1);  // |0 - (0+0)| = 0
    CHECK(model.in_range(1, 0, 1) == 0);  // |3 - 0| = 3 > 1
    // observer 2 is displaced onto the far point
    CHECK(model.in_range(2, 0, 1) == 1);  // |3 - (0+3)| = 0
    CHECK(model.in_range(2, 0, 0) == 0);

    SUBCASE("zero displacement with any radius includes the coincident point") {
        spec.radius1 = 0.0;
        const MultiObserverModel zero(spec);
        CHECK(zero.in_range(1, 0, 0) == 1);
    }

    SUBCASE("randomized triples match the direct norm computation") {
        std::mt19937_64 rng(51);
        const MultiObserverSpec random = testing::random_multi_spec({.outcomes = 2, .dimension = 3,
                                                                     .points = 2}, rng);
        const MultiObserverModel rmodel(random);
        for (Eigen::Index zi = 0; zi < random.grid_z.point_count(); ++zi)
            for (Eigen::Index xi = 0; xi < random.grid_x.point_count(); ++xi)
                for (int p = 1; p <= 2; ++p) {
                    const Eigen::VectorXd d = p == 1 ? random.offset1 : random.offset2;
                    const double a = p == 1 ? random.radius1 : random.radius2;
                    const double dist =
                        (random.grid_x.point(xi) - (random.grid_z.point(zi) + d)).norm();
                    CHECK(rmodel.in_range(p, zi, xi) == (dist <= a ? 1 : 0));
                }
    }
}

TEST_CASE("joint weights: hand-evaluated instances") {
    SUBCASE("single point, both observers in range: diagonal marginals") {
        const MultiObserverModel model(single_point_spec());
        const JointWeightMatrix joint = model.joint_weights();
        joint.require_valid();
        CHECK(joint.weights(1, 1) == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(joint.weights(2, 2) == doctest::Approx(0.7).epsilon(1e-14));
        for (int i = 0; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j)
                if (i != j || i == 0) CHECK(std::abs(joint.weights(i, j)) == 0.0);
    }

    SUBCASE("offsets that miss every system point leave total ignorance") {
        MultiObserverSpec spec = separated_spec();
        spec.radius1 = 0.25;
        spec.radius2 = 0.25;
        spec.offset1 = Eigen::VectorXd::Constant(1, 1.0);
        spec.offset2 = Eigen::VectorXd::Constant(1, 2.0);
        const JointWeightMatrix joint = MultiObserverModel(spec).joint_weights();
        CHECK(joint.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(joint.total == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("disjoint regions: single-observer blocks carry the weight") {
        const MultiObserverModel model(separated_spec());
        const JointWeightMatrix joint = model.joint_weights();
        joint.require_valid();
        // observer 1 sees xi=0, observer 2 sees xi=3
        CHECK(joint.weights(1, 0) == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(joint.weights(2, 0) == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(joint.weights(0, 1) == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(joint.weights(0, 2) == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(std::abs(joint.weights(0, 0)) == 0.0);
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j) CHECK(std::abs(joint.weights(i, j)) == 0.0);
    }
}

TEST_CASE("separated regions never see both observers measure") {
    SUBCASE("the worked instance passes") {
        const LocalizationReport report = MultiObserverModel(separated_spec()).check_separated();
        CHECK(report.pass);
        CHECK(report.max_forbidden <= 1e-14);
    }

    SUBCASE("randomized separated specs pass") {
        std::mt19937_64 rng(52);
        for (int trial = 0; trial < 25; ++trial) {
            const MultiObserverSpec spec = testing::random_separated_spec({.outcomes = 2}, rng);
            const LocalizationReport report = MultiObserverModel(spec).check_separated();
            CHECK(report.pass);
        }
    }

    SUBCASE("touching regions are rejected as a hypothesis violation") {
        MultiObserverSpec spec = separated_spec();
        spec.radius1 = 1.5;
        spec.radius2 = 1.5;  // |d1-d2| = 3 = a1+a2 exactly
        CHECK_THROWS_WITH_AS(MultiObserverModel(spec).check_separated(),
                             doctest::Contains("separated"), std::invalid_argument);
    }
}

TEST_CASE("coincident regions agree or stay ignorant together") {
    SUBCASE("single-point instance: only the diagonal survives") {
        const LocalizationReport report = MultiObserverModel(single_point_spec()).check_coincident();
        CHECK(report.pass);
        CHECK(report.max_forbidden <= 1e-14);
    }

    SUBCASE("full coverage pushes everything onto measured diagonals") {
        MultiObserverSpec spec = single_point_spec();
        spec.radius1 = spec.radius2 = 100.0;
        const JointWeightMatrix joint = MultiObserverModel(spec).joint_weights();
        CHECK(std::abs(joint.weights(0, 0)) == 0.0);
        CHECK(joint.weights(1, 1) == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(joint.weights(2, 2) == doctest::Approx(0.7).epsilon(1e-14));
    }

    SUBCASE("randomized coincident specs pass") {
        std::mt19937_64 rng(53);
        for (int trial = 0; trial < 25; ++trial) {
            const MultiObserverSpec spec = testing::random_coincident_spec({.outcomes = 2}, rng);
            const LocalizationReport report = MultiObserverModel(spec).check_coincident();
            CHECK(report.pass);
        }
    }

    SUBCASE("mismatched regions are rejected") {
        CHECK_THROWS_WITH_AS(MultiObserverModel(separated_spec()).check_coincident(),
                             doctest::Contains("coincident"), std::invalid_argument);
    }
}

TEST_CASE("verifier labels: algebra, expectations, and the two-path pointer") {
    // minimal instance: M = 1, single-point grids, everything in range
    MultiObserverSpec spec;
    spec.ideal.outcome_count = 1;
    spec.ideal.alphas = {1.0};
    spec.ideal.betas = {0.0, 1.0};
    spec.grid_x = SpatialGrid(1, 1, 1.0);
    spec.grid_z = SpatialGrid(1, 1, 1.0);
    spec.radius1 = 1.0;
    spec.radius2 = 0.25;
    spec.offset1 = Eigen::VectorXd::Zero(1);
    spec.offset2 = Eigen::VectorXd::Zero(1);
    spec.psi_xs = Eigen::MatrixXcd(1, 1);
    spec.psi_xs << 1.0;
    spec.psi_z = Vector(1);
    spec.psi_z << 1.0;
    const MultiObserverModel model(spec);
    CHECK(model.full_space().dim() == 20);  // 5 * 2 * 2 * 1 * 1 * 1

    const std::vector<LinOp> labels = model.g_labels();
    REQUIRE(labels.size() == 4);

    SUBCASE("orthogonality, completeness, and pairwise commutation") {
        LinOp sum = LinOp::zero(labels[0].space());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            sum += labels[i];
            for (std::size_t j = 0; j < labels.size(); ++j) {
                const LinOp product = labels[i] * labels[j];
                if (i == j)
                    CHECK(max_abs_diff(product.mat(), labels[i].mat()) <= 1e-10);
                else
                    CHECK(max_abs(product.mat()) <= 1e-10);
                const LinOp reversed = labels[j] * labels[i];
                CHECK(max_abs_diff(product.mat(), reversed.mat()) <= 1e-10);
            }
        }
        CHECK(max_abs_diff(sum.mat(), Matrix::Identity(sum.dim(), sum.dim())) <= 1e-10);
    }

    SUBCASE("label expectations reproduce the grid-sum weights") {
        const JointWeightMatrix joint = model.joint_weights();
        const BranchWeightReport via_ops = model.operator_path_weights();
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j)
                CHECK(std::abs(joint.weights(i, j) - via_ops.weight_of(i * 2 + j)) <= 1e-10);
    }

    SUBCASE("evolved verifier pointer equals its label expansion") {
        const LinOp u_total = model.total_unitary();
        CHECK(u_total.is_unitary(1e-10));
        const LinOp g_full = embed(model.verifier_pointer(), model.full_space());
        const LinOp evolved = heisenberg_evolve(g_full, u_total);

        LinOp expansion = LinOp::zero(model.full_space());
        const LinOp g = model.verifier_pointer();
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j) {
                // verifier-side rotation conjugate of the pointer
                Matrix rot = Matrix::Identity(5, 5);
                const int target = model.g_index().index_of(i, j);
                rot(0, 0) = 0.0;
                rot(target, target) = 0.0;
                rot(target, 0) = 1.0;
                rot(0, target) = -1.0;
                const LinOp u_ij(ProductSpace(model.verifier_space()), rot);
                const LinOp g_ij = u_ij.adjoint() * g * u_ij;
                expansion += kron(g_ij, labels[static_cast<std::size_t>(i * 2 + j)]);
            }
        CHECK(max_abs_diff(evolved.mat(), expansion.mat()) <= 1e-10);
    }

    SUBCASE("oracle agreement on the minimal instance") {
        const JointWeightMatrix joint = model.joint_weights();
        const OracleResult oracle = oracle_multi(spec);
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j)
                CHECK(std::abs(joint.weights(i, j) -
                               oracle.probabilities.at(static_cast<std::size_t>(i * 2 + j))) <= 1e-12);
    }
}

TEST_CASE("pointer splitting and unchanged observables under the full evolution") {
    std::mt19937_64 rng(54);
    const MultiObserverSpec spec = testing::random_multi_spec({.outcomes = 1, .points = 2}, rng);
    const MultiObserverModel model(spec);
    const ProductSpace full = model.full_space();
    const LinOp u1 = model.observer_unitary(1);
    const LinOp u2 = model.observer_unitary(2);
    const LinOp u_total = model.total_unitary();

    SUBCASE("each observer pointer splits against its own interaction region") {
        for (int p = 1; p <= 2; ++p) {
            Eigen::VectorXd betas(2);
            betas << spec.ideal.betas[0], spec.ideal.betas[1];
            const LinOp pointer = embed(LinOp::diagonal(model.observer_space(p), betas), full);
            const LinOp after_both = heisenberg_evolve(pointer, u2 * u1);
            const LinOp after_own = heisenberg_evolve(pointer, p == 1 ? u1 : u2);
            CHECK(max_abs_diff(after_both.mat(), after_own.mat()) <= 1e-12);
        }
    }

    SUBCASE("system and position observables are unchanged by the whole chain") {
        Eigen::VectorXd alphas(1);
        alphas << spec.ideal.alphas[0];
        std::vector<LinOp> untouched;
        untouched.push_back(embed(LinOp::diagonal(full.factor(3), alphas), full));

        Eigen::VectorXd coord_z(spec.grid_z.point_count()), coord_x(spec.grid_x.point_count());
        for (Eigen::Index k = 0; k < spec.grid_z.point_count(); ++k)
            coord_z(k) = spec.grid_z.point(k)(0);
        for (Eigen::Index k = 0; k < spec.grid_x.point_count(); ++k)
            coord_x(k) = spec.grid_x.point(k)(0);
        untouched.push_back(embed(LinOp::diagonal(full.factor(4), coord_z), full));
        untouched.push_back(embed(LinOp::diagonal(full.factor(5), coord_x), full));

        for (const LinOp& op : untouched)
            CHECK(max_abs_diff(heisenberg_evolve(op, u_total).mat(), op.mat()) <= 1e-12);
    }
}

TEST_CASE("the dense verifier-label path refuses oversized spaces") {
    MultiObserverSpec spec = separated_spec();
    spec.grid_x = SpatialGrid(1, 5, 1.0);
    spec.grid_z = SpatialGrid(1, 5, 1.0);
    spec.psi_xs = Eigen::MatrixXcd::Zero(2, 5);
    spec.psi_xs(0, 0) = 1.0;
    spec.psi_z = Vector::Zero(5);
    spec.psi_z(0) = 1.0;
    const MultiObserverModel model(spec);  // 10 * 3 * 3 * 2 * 25 = 4500
    CHECK_THROWS_WITH_AS(model.g_labels(), doctest::Contains("operator path too large"),
                         std::invalid_argument);
    CHECK_NOTHROW(model.joint_weights());
}

TEST_CASE("joint normalization is validated as a product") {
    MultiObserverSpec spec = separated_spec();
    spec.psi_z *= 2.0;  // breaks the product normalization
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("joint normalization"),
                         std::invalid_argument);
}
