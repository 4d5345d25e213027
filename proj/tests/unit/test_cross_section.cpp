#include <doctest.h>

#include <cmath>
#include <set>

#include "thomaslab/cross_section.hpp"

using namespace tlab;

namespace {

CrossSectionSpec interval_spec(double length, Bc bc) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::Interval;
    spec.length = length;
    spec.bc = bc;
    return spec;
}

CrossSectionSpec circle_spec(double length) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::Circle;
    spec.length = length;
    return spec;
}

CrossSectionSpec torus_spec(const Eigen::MatrixXd& basis) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::FlatTorus;
    spec.torus_basis = basis;
    return spec;
}

} // namespace

TEST_CASE("interval eigenvalues are the squared integers") {
    const CrossSection dir = CrossSection::first(interval_spec(M_PI, Bc::Dirichlet), 6);
    for (int j = 0; j < 6; ++j)
        CHECK(dir.mu(j) == doctest::Approx((j + 1.0) * (j + 1.0)).epsilon(1e-14));

    const CrossSection neu = CrossSection::first(interval_spec(M_PI, Bc::Neumann), 6);
    for (int j = 0; j < 6; ++j) CHECK(neu.mu(j) == doctest::Approx(j * j).epsilon(1e-14));
    CHECK(dir.has_boundary());
    CHECK(neu.volume() == doctest::Approx(M_PI));
}

TEST_CASE("quadrature orthonormality holds to 1e-12 on interval and circle") {
    for (const auto& spec :
         {interval_spec(M_PI, Bc::Dirichlet), interval_spec(2.0, Bc::Neumann), circle_spec(2 * M_PI)}) {
        const CrossSection cs = CrossSection::first(spec, 8);
        const QuadratureGrid grid = quadrature_grid(spec, 64);
        const Eigen::MatrixXcd tab = eigenfunction_table(cs, grid);
        const Eigen::MatrixXcd gram = tab.adjoint() * grid.weights.asDiagonal() * tab;
        CHECK((gram - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("L4 norm of the first Dirichlet mode matches the closed form") {
    // integral of (sqrt(2/pi) sin x)^4 over [0, pi] equals 3/(2 pi)
    const CrossSectionSpec spec = interval_spec(M_PI, Bc::Dirichlet);
    const CrossSection cs = CrossSection::first(spec, 1);
    const QuadratureGrid grid = quadrature_grid(spec, 48);
    Eigen::VectorXcd vals(grid.nodes.rows());
    for (long i = 0; i < grid.nodes.rows(); ++i) vals[i] = cs.eval(0, grid.nodes.row(i));
    CHECK(lq_norm(grid, vals, 4) ==
          doctest::Approx(std::pow(3.0 / (2.0 * M_PI), 0.25)).epsilon(1e-12));
}

TEST_CASE("endpoint values follow the Neumann cosine pattern") {
    const CrossSection cs = CrossSection::first(interval_spec(M_PI, Bc::Neumann), 5);
    CHECK(cs.endpoint_value(0, false) == doctest::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-14));
    for (int j = 1; j < 5; ++j) {
        CHECK(cs.endpoint_value(j, false) ==
              doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
        const double far = cs.endpoint_value(j, true);
        CHECK(far == doctest::Approx((j % 2 ? -1.0 : 1.0) * std::sqrt(2.0 / M_PI)).epsilon(1e-14));
    }
}

TEST_CASE("circle spectrum, multiplicity and constant-modulus eigenfunctions") {
    const CrossSection cs = CrossSection::first(circle_spec(2.0 * M_PI), 7);
    CHECK(cs.mu(0) == doctest::Approx(0.0));
    CHECK(cs.mu(1) == doctest::Approx(1.0));
    CHECK(cs.mu(2) == doctest::Approx(1.0));
    CHECK(cs.mu(3) == doctest::Approx(4.0));
    Eigen::VectorXd x(1);
    x << 1.234;
    for (int j = 0; j < 7; ++j)
        CHECK(std::abs(cs.eval(j, x)) ==
              doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-13));
}

TEST_CASE("hexagonal torus spectrum agrees with the dual lattice combinations") {
    Eigen::MatrixXd basis(2, 2);
    basis << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const CrossSection cs = CrossSection::up_to(torus_spec(basis), 500.0);
    const Eigen::MatrixXd dual = dual_matrix(basis);

    std::multiset<double> brute;
    for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j) {
            const double mu = (i * dual.row(0) + j * dual.row(1)).squaredNorm();
            if (mu <= 500.0) brute.insert(mu);
        }
    REQUIRE(cs.count() == static_cast<int>(brute.size()));
    auto it = brute.begin();
    for (int j = 0; j < cs.count(); ++j, ++it) CHECK(cs.mu(j) == doctest::Approx(*it).epsilon(1e-12));
}

TEST_CASE("torus mode count tracks the Weyl volume law") {
    Eigen::MatrixXd basis = 2.0 * M_PI * Eigen::MatrixXd::Identity(3, 3);
    const double cap = 900.0;
    const CrossSection cs = CrossSection::up_to(torus_spec(basis), cap);
    const double predicted =
        cs.volume() * (4.0 / 3.0) * M_PI * std::pow(cap, 1.5) / std::pow(2.0 * M_PI, 3);
    CHECK(std::abs(cs.count() - predicted) / predicted < 0.02);
}

TEST_CASE("interval times torus combines both factors") {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::IntervalTimesTorus;
    spec.length = M_PI;
    spec.bc = Bc::Dirichlet;
    spec.torus_basis = 2.0 * M_PI * Eigen::MatrixXd::Identity(2, 2);
    const CrossSection cs = CrossSection::up_to(spec, 30.0);
    CHECK(cs.dim() == 3);
    CHECK(cs.volume() == doctest::Approx(M_PI * std::pow(2.0 * M_PI, 2)).epsilon(1e-12));
    // lowest mode: sin(x) times the constant torus mode, mu = 1
    CHECK(cs.mu(0) == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::VectorXd x(3);
    x << M_PI / 2.0, 0.3, -0.2;
    CHECK(std::abs(cs.eval(0, x)) ==
          doctest::Approx(std::sqrt(2.0 / M_PI) / (2.0 * M_PI)).epsilon(1e-12));

    // spectrum is complete under the cap: mu values are j^2 + |nu|^2
    std::multiset<double> brute;
    for (int j = 1; j * j <= 30; ++j)
        for (int a = -6; a <= 6; ++a)
            for (int b = -6; b <= 6; ++b) {
                const double mu = j * j + a * a + b * b;
                if (mu <= 30.0) brute.insert(mu);
            }
    REQUIRE(cs.count() == static_cast<int>(brute.size()));
    auto it = brute.begin();
    for (int j = 0; j < cs.count(); ++j, ++it) CHECK(cs.mu(j) == doctest::Approx(*it).epsilon(1e-12));
}

TEST_CASE("first and up_to agree on ordering and completeness") {
    const CrossSectionSpec spec = circle_spec(2.0 * M_PI);
    const CrossSection a = CrossSection::first(spec, 15);
    const CrossSection b = CrossSection::up_to(spec, a.mu(14) + 0.5);
    REQUIRE(b.count() >= 15);
    for (int j = 0; j < 15; ++j) {
        CHECK(a.mu(j) == b.mu(j));
        CHECK(a.mode(j).label == b.mode(j).label);
    }
    CHECK(b.complete_cap() >= a.mu(14));
}

TEST_CASE("quadrature grid rejects a resolution too coarse for the requested cap") {
    const CrossSectionSpec spec = circle_spec(2.0 * M_PI);
    CHECK_THROWS_AS(quadrature_grid(spec, 4, 12), std::invalid_argument);
    CHECK_NOTHROW(quadrature_grid(spec, 64, 12));
}
