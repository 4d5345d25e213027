#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "thomaslab/clusters.hpp"
#include "thomaslab/galerkin.hpp"

using namespace tlab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const CrossSection> torus3(double cap) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::FlatTorus;
    spec.torus_basis = Eigen::MatrixXd::Identity(3, 3) * (2.0 * M_PI);
    return std::make_shared<CrossSection>(CrossSection::up_to(spec, cap));
}

std::shared_ptr<const CrossSection> interval_cs(double cap, Bc bc) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::Interval;
    spec.length = M_PI;
    spec.bc = bc;
    return std::make_shared<CrossSection>(CrossSection::up_to(spec, cap));
}

} // namespace

TEST_CASE("cluster membership is the half-open square bracket") {
    const auto cs = torus3(500.0);
    const ClusterContext ctx = manifold_context(cs);
    for (int k = 1; k <= 20; ++k) {
        std::vector<std::size_t> brute;
        for (std::size_t i = 0; i < ctx.total(); ++i) {
            const double v = ctx.value(i);
            const double lo = double(k - 1) * double(k - 1);
            if (v >= lo && v < double(k) * double(k)) brute.push_back(i);
        }
        CHECK(cluster_members(ctx, k) == brute);
    }

    // mu = 4 sits exactly on the boundary between clusters 2 and 3 and must
    // land in the upper one
    const auto icap = interval_cs(80.0, Bc::Dirichlet);
    const ClusterContext ic = manifold_context(icap);
    const auto c2 = cluster_members(ic, 2);
    const auto c3 = cluster_members(ic, 3);
    for (std::size_t i : c2) CHECK(ic.value(i) < 4.0);
    REQUIRE(!c3.empty());
    CHECK(ic.value(c3.front()) == 4.0);

    CHECK_THROWS_AS(cluster_members(ic, 0), std::invalid_argument);
    CHECK_THROWS_AS(cluster_members(ic, 10), std::invalid_argument); // cap 80 < 100
}

TEST_CASE("projector norms at the exact exponents") {
    const auto cs = torus3(420.0);
    const ClusterContext ctx = manifold_context(cs);
    const double vol = std::pow(2.0 * M_PI, 3);

    for (int k : {3, 7, 15}) {
        const long nk = static_cast<long>(cluster_members(ctx, k).size());
        REQUIRE(nk > 0);

        const ClusterNormEntry at2 = cluster_norm(ctx, k, 2.0);
        CHECK(at2.exact);
        CHECK(at2.lower == 1.0);
        CHECK(at2.upper == 1.0);
        CHECK(at2.rank == nk);

        // torus eigenfunctions have constant modulus, so the sup of the
        // spectral function is sqrt(N_k / vol)
        const ClusterNormEntry sup = cluster_norm(ctx, k, kInf);
        CHECK(sup.exact);
        CHECK(sup.lower == doctest::Approx(std::sqrt(double(nk) / vol)).epsilon(1e-12));
    }
}

TEST_CASE("intermediate exponents give an honest bracket") {
    const auto cs = torus3(180.0);
    const ClusterContext ctx = manifold_context(cs);
    NormOptions opts;
    opts.starts = 8;
    for (int k : {2, 5, 9})
        for (double q : {4.0, 6.0}) {
            const ClusterNormEntry e = cluster_norm(ctx, k, q, opts);
            CHECK(!e.exact);
            CHECK(e.lower > 0.0);
            CHECK(e.lower <= e.upper * (1.0 + 1e-12));
        }
    CHECK_THROWS_AS(cluster_norm(ctx, 2, 1.5), std::invalid_argument);
}

TEST_CASE("a rank-one cluster closes the bracket") {
    // Neumann ground state is constant, so duality converges immediately and
    // the interpolated upper bound is attained
    const auto cs = interval_cs(60.0, Bc::Neumann);
    const ClusterContext ctx = manifold_context(cs);
    const auto members = cluster_members(ctx, 1);
    REQUIRE(members.size() == 1);
    const ClusterNormEntry e = cluster_norm(ctx, 1, 4.0);
    CHECK(e.lower == doctest::Approx(std::pow(M_PI, -0.25)).epsilon(1e-9));
    CHECK(e.upper == doctest::Approx(std::pow(M_PI, -0.25)).epsilon(1e-9));
}

TEST_CASE("the mixed-section supremum matches a direct member sum") {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::IntervalTimesTorus;
    spec.length = M_PI;
    spec.bc = Bc::Dirichlet;
    spec.torus_basis = Eigen::MatrixXd::Identity(2, 2) * (2.0 * M_PI);
    const auto cs = std::make_shared<CrossSection>(CrossSection::up_to(spec, 120.0));
    const ClusterContext ctx = manifold_context(cs);

    for (int k : {3, 6, 10}) {
        const auto members = cluster_members(ctx, k);
        REQUIRE(!members.empty());
        double brute = 0.0;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
        for (int i = 0; i <= 4096; ++i) {
            x[0] = M_PI * i / 4096.0;
            double s = 0.0;
            for (std::size_t idx : members) s += std::norm(cs->eval(static_cast<int>(idx), x));
            brute = std::max(brute, s);
        }
        const ClusterNormEntry e = cluster_norm(ctx, k, std::numeric_limits<double>::infinity());
        CHECK(e.lower == doctest::Approx(std::sqrt(brute)).epsilon(1e-12));
    }
}

TEST_CASE("fiber spectra only support the exact exponents") {
    Eigen::MatrixXd b(1, 1);
    b << 1.0;
    const Lattice lat(b);
    const auto cs = interval_cs(150.0, Bc::Dirichlet);
    const FiberModel model{lat, cs, PotentialSpec::zero(lat), {}};
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 150.0);
    const ClusterContext ctx = fiber_context(cs, modes, lat.cell_volume() * M_PI);

    const auto e = cluster_norm(ctx, 5, kInf);
    CHECK(e.exact);
    CHECK(e.lower > 0.0);
    CHECK_THROWS_AS(cluster_norm(ctx, 5, 4.0), std::invalid_argument);
}

TEST_CASE("exponent fit recovers a synthetic power law") {
    std::vector<double> ks, norms;
    for (int k = 10; k <= 40; ++k) {
        ks.push_back(k);
        norms.push_back(3.0 * std::pow(double(k), 0.25));
    }
    const ExponentFit fit = fit_cluster_exponent(ks, norms, 4.0);
    CHECK(fit.slope == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fit.epsilon == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(fit.rms_residual < 1e-12);
    CHECK(fit.count == 31);
    CHECK(fit.k_min == 10);
    CHECK(fit.k_max == 40);

    std::vector<double> few(ks.begin(), ks.begin() + 5);
    std::vector<double> fewn(norms.begin(), norms.begin() + 5);
    CHECK_THROWS_AS(fit_cluster_exponent(few, fewn, 4.0), std::invalid_argument);
}

TEST_CASE("reference exponents and their validity windows") {
    CHECK(reference_exponent(3, 4.0, Regime::NoBoundary) == doctest::Approx(0.25));
    CHECK(reference_exponent(3, kInf, Regime::NoBoundary) == doctest::Approx(1.0));
    CHECK(reference_exponent(4, kInf, Regime::ProductInterval) == doctest::Approx(1.5));
    CHECK_THROWS_AS(reference_exponent(3, 3.0, Regime::NoBoundary), std::invalid_argument);

    CHECK(reference_exponent(3, 5.0, Regime::BoundaryHighQ) == doctest::Approx(0.4));
    CHECK(reference_exponent(4, 4.0, Regime::BoundaryHighQ) == doctest::Approx(0.5));
    CHECK_THROWS_AS(reference_exponent(3, 4.5, Regime::BoundaryHighQ), std::invalid_argument);

    CHECK(reference_exponent(4, 3.0, Regime::BoundaryLowQ) == doctest::Approx(1.0 / 3.0));
    CHECK(reference_exponent(4, 2.0, Regime::BoundaryLowQ) == doctest::Approx(0.0));
    CHECK_THROWS_AS(reference_exponent(3, 3.0, Regime::BoundaryLowQ), std::invalid_argument);
    CHECK_THROWS_AS(reference_exponent(4, 5.0, Regime::BoundaryLowQ), std::invalid_argument);

    CHECK_THROWS_AS(reference_exponent(1, 4.0, Regime::NoBoundary), std::invalid_argument);
    CHECK_THROWS_AS(reference_exponent(3, 1.0, Regime::NoBoundary), std::invalid_argument);
}

TEST_CASE("resolvent comparison sums against a high-precision reference") {
    struct Row {
        double eps, tau, s1, s2;
    };
    // frozen from an arbitrary-precision evaluation of the raw series
    const Row rows[] = {
        {0.10, 2.0, 5.3648993060989867, 6.2566723575440654},
        {0.10, 50.0, 4.2090662602125707, 4.2504241152156568},
        {0.10, 100.0, 3.9382608065782042, 3.9584737844603498},
        {0.10, 9999.0, 2.2969962765214784, 2.2971351845306868},
        {0.25, 2.0, 2.2581125758547056, 2.7567392533289451},
        {0.49, 10.0, 0.41150005438113919, 0.42155472834571914},
    };
    for (const Row& r : rows) {
        const LemmaSums s = lemma_sums(r.eps, r.tau);
        CHECK(s.s1 == doctest::Approx(r.s1).epsilon(1e-8));
        CHECK(s.s2 == doctest::Approx(r.s2).epsilon(1e-8));
    }

    CHECK_THROWS_AS(lemma_sums(0.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(lemma_sums(0.5, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(lemma_sums(0.1, 1.0), std::invalid_argument);
}

TEST_CASE("cluster extremes match a brute enumeration") {
    Eigen::MatrixXd b(1, 1);
    b << 1.0;
    const Lattice lat(b);
    const int k_max = 12;
    const auto cs = interval_cs(double(k_max) * double(k_max), Bc::Dirichlet);
    const Eigen::VectorXd xi = Eigen::VectorXd::Zero(1);
    const ClusterExtremes ext = build_cluster_extremes(lat, *cs, xi, k_max);
    REQUIRE(ext.k_max == k_max);

    std::vector<long> count(k_max + 1, 0);
    std::vector<double> lo(k_max + 1, kInf), hi(k_max + 1, -kInf);
    for (int n = -40; n <= 40; ++n) {
        const double a = 2.0 * M_PI * n + M_PI;
        for (int j = 1; j * j <= k_max * k_max; ++j) {
            const double v = a * a + j * j;
            const int k = static_cast<int>(std::floor(std::sqrt(v))) + 1;
            if (k > k_max || v >= double(k_max) * double(k_max)) continue;
            ++count[k];
            lo[k] = std::min(lo[k], v);
            hi[k] = std::max(hi[k], v);
        }
    }
    for (int k = 1; k <= k_max; ++k) {
        CHECK(ext.count[k] == count[k]);
        if (count[k] > 0) {
            CHECK(ext.lo[k] == doctest::Approx(lo[k]).epsilon(1e-13));
            CHECK(ext.hi[k] == doctest::Approx(hi[k]).epsilon(1e-13));
        }
    }

    CHECK_THROWS_AS(build_cluster_extremes(lat, *cs, xi, 20), std::invalid_argument);
}

TEST_CASE("weighted cluster sum equals its brute counterpart on the table") {
    Eigen::MatrixXd b(1, 1);
    b << 1.0;
    const Lattice lat(b);
    const int k_max = 60;
    const auto cs = interval_cs(double(k_max) * double(k_max), Bc::Dirichlet);
    const Eigen::VectorXd xi = Eigen::VectorXd::Zero(1);
    const ClusterExtremes ext = build_cluster_extremes(lat, *cs, xi, k_max);
    const double eps = 0.1;

    for (double tau : {3.7, 11.0, 24.3}) {
        const WeightedSumResult w = weighted_cluster_sum(ext, eps, tau);
        double brute = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            double best = 0.0;
            for (int n = -40; n <= 40; ++n) {
                const double a = 2.0 * M_PI * n + M_PI;
                for (int j = 1; j * j <= k_max * k_max; ++j) {
                    const double v = a * a + j * j;
                    if (v < double(k - 1) * double(k - 1) || v >= double(k) * double(k))
                        continue;
                    best = std::max(best, 1.0 / (std::abs(v - tau * tau) + tau));
                }
            }
            brute += std::pow(double(k), 1.0 - 2.0 * eps) * best;
        }
        CHECK(w.value - w.tail == doctest::Approx(brute).epsilon(1e-11));

        // with the allowance max_k k^{-2 eps} = 1 the resolvent sums dominate
        const LemmaSums s = lemma_sums(eps, tau);
        CHECK(w.value <= s.s1 + s.s2 + 2.0 + 1e-9);
        if (w.exceptional_k > 0) {
            CHECK(w.exceptional_k >= static_cast<int>(std::floor(tau)));
            CHECK(w.exceptional_k <= static_cast<int>(std::ceil(tau)) + 1);
        }
    }

    CHECK_THROWS_AS(weighted_cluster_sum(ext, 0.1, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_cluster_sum(ext, 0.6, 10.0), std::invalid_argument);
}
