#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <string>

#include "thomaslab/csv.hpp"
#include "thomaslab/lattice.hpp"
#include "thomaslab/rng.hpp"

using namespace tlab;

namespace {

Eigen::MatrixXd hexagonal_basis() {
    Eigen::MatrixXd b(2, 2);
    b << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    return b;
}

} // namespace

TEST_CASE("dual basis of the hexagonal lattice matches the closed form") {
    const Eigen::MatrixXd d = dual_matrix(hexagonal_basis());
    const double two_pi = 2.0 * M_PI;
    // d1 = 2*pi*(1, -1/sqrt(3)), d2 = 2*pi*(0, 2/sqrt(3))
    CHECK(d(0, 0) == doctest::Approx(two_pi).epsilon(1e-14));
    CHECK(d(0, 1) == doctest::Approx(-two_pi / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(d(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d(1, 1) == doctest::Approx(2.0 * two_pi / std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("basis and dual pair in 2 pi delta for random bases") {
    CounterRng rng(7, 0);
    std::uint64_t c = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.bits(c++) % 3);
        Eigen::MatrixXd b(n, n);
        do {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) b(i, j) = 2.0 * rng.uniform(c++) - 1.0;
        } while (std::abs(b.determinant()) < 0.1);
        const Eigen::MatrixXd pairing = b * dual_matrix(b).transpose();
        CHECK((pairing - 2.0 * M_PI * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("dual_matrix rejects a singular basis") {
    Eigen::MatrixXd b(2, 2);
    b << 1.0, 2.0, 0.5, 1.0;
    CHECK_THROWS_AS(dual_matrix(b), std::invalid_argument);
}

TEST_CASE("lattice constructor rescales so the first period has unit length") {
    Eigen::MatrixXd b(2, 2);
    b << 3.0, 4.0, 0.0, 10.0;
    const Lattice lat(b);
    CHECK(lat.b1().norm() == doctest::Approx(1.0).epsilon(1e-15));
    // the whole basis shrinks by the same factor 1/5
    CHECK(lat.basis()(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(lat.cell_volume() == doctest::Approx(std::abs(b.determinant()) / 25.0).epsilon(1e-13));
    CHECK((lat.basis() * lat.dual().transpose() -
           2.0 * M_PI * Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("dual point enumeration agrees with a brute-force double loop") {
    const Eigen::MatrixXd d = dual_matrix(hexagonal_basis());
    Eigen::Vector2d center(0.7, -0.4);
    const double radius = 23.0;

    std::set<std::pair<int, int>> brute;
    for (int i = -40; i <= 40; ++i)
        for (int j = -40; j <= 40; ++j) {
            const Eigen::Vector2d p = i * d.row(0).transpose() + j * d.row(1).transpose();
            if ((p - center).norm() <= radius) brute.insert({i, j});
        }

    std::vector<std::pair<int, int>> seen;
    for_each_dual_point(d, center, radius, [&](const int* c, const Eigen::VectorXd& cart) {
        seen.emplace_back(c[0], c[1]);
        const Eigen::Vector2d p = c[0] * d.row(0).transpose() + c[1] * d.row(1).transpose();
        CHECK((cart - p).norm() < 1e-10);
    });

    CHECK(seen.size() == brute.size());
    for (const auto& pr : seen) CHECK(brute.count(pr) == 1);
    // lexicographic order of the integer coordinates
    CHECK(std::is_sorted(seen.begin(), seen.end()));
}

TEST_CASE("enumerate_dual_points covers the trivial one-dimensional case") {
    Eigen::MatrixXd b(1, 1);
    b << 1.0;
    const Lattice lat(b);
    const auto pts = enumerate_dual_points(lat, Eigen::VectorXd::Zero(1), 4.5 * 2.0 * M_PI);
    CHECK(pts.size() == 9); // n = -4..4 at spacing 2 pi
}

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
    const CounterRng a(123, 5), b(123, 5), c(123, 6);
    CHECK(a.bits(17) == b.bits(17));
    CHECK(a.uniform(400) == b.uniform(400));
    CHECK(a.normal(31) == b.normal(31));
    CHECK(a.bits(17) != c.bits(17));

    // out-of-order consumption changes nothing
    const double early = a.uniform(2);
    (void)a.uniform(1000);
    CHECK(a.uniform(2) == early);
}

TEST_CASE("counter rng moments are sane") {
    const CounterRng rng(2024, 0);
    double mean = 0, var = 0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) mean += rng.normal(i);
    mean /= n;
    for (int i = 0; i < n; ++i) {
        const double d = rng.normal(i) - mean;
        var += d * d;
    }
    var /= n - 1;
    CHECK(std::abs(mean) < 0.1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.1));
    for (int i = 0; i < 256; ++i) {
        const double u = rng.uniform(i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("format_double round-trips exactly") {
    const double values[] = {0.0,   -0.0,       1.0 / 3.0, 0.1,   1e-300, 1e300,
                             M_PI,  -2.5e-17,   6.02e23,   123.0, 5e-324, 1.7976931348623157e308};
    for (double v : values) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("log-log fit recovers an exact power law") {
    std::vector<double> x, y;
    for (int i = 1; i <= 30; ++i) {
        x.push_back(1.5 * i);
        y.push_back(7.25 * std::pow(1.5 * i, -0.83));
    }
    const LineFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-0.83).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(7.25).epsilon(1e-12));
    CHECK(f.rms_residual < 1e-13);
    CHECK(f.slope_stderr < 1e-13);
}

TEST_CASE("fnv hash distinguishes nearby strings") {
    const char a[] = "tau=2.0";
    const char b[] = "tau=2.1";
    CHECK(fnv1a64(a, sizeof(a) - 1) != fnv1a64(b, sizeof(b) - 1));
    CHECK(fnv1a64(a, sizeof(a) - 1) == fnv1a64(a, sizeof(a) - 1));
}
