#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <vector>

#include "thomaslab/verifier.hpp"

using namespace tlab;
using cd = std::complex<double>;

namespace {

Lattice line_lattice() {
    Eigen::MatrixXd b(1, 1);
    b << 1.0;
    return Lattice(b);
}

std::shared_ptr<const CrossSection> interval_cs(double cap, Bc bc) {
    CrossSectionSpec spec;
    spec.kind = CrossSectionSpec::Kind::Interval;
    spec.length = M_PI;
    spec.bc = bc;
    return std::make_shared<CrossSection>(CrossSection::up_to(spec, cap));
}

FiberModel free_layer(double cap, Bc bc = Bc::Dirichlet) {
    const Lattice lat = line_lattice();
    return FiberModel{lat, interval_cs(cap, bc), PotentialSpec::zero(lat), {}};
}

FiberModel mathieu_layer(double cap, Bc bc = Bc::Neumann) {
    const Lattice lat = line_lattice();
    std::map<PotentialSpec::Key, cd> h;
    h[{1}] = 1.0;
    h[{-1}] = 1.0;
    return FiberModel{lat, interval_cs(cap, bc), PotentialSpec::from_harmonics(lat, h), {}};
}

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i)
        g[i] = lo * std::pow(hi / lo, double(i) / (count - 1));
    return g;
}

} // namespace

TEST_CASE("free decay scan matches the diagonal extremes and the 1/tau law") {
    const std::vector<double> taus = log_grid(20.0, 200.0, 8);
    const double cap = default_lambda_max(taus.back());
    const FiberModel model = free_layer(cap);
    const DecayScan scan = thomas_decay_scan(model, 0.0, Eigen::VectorXd::Zero(1), taus);

    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), cap);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        double best = 0.0;
        for (std::size_t k = 0; k < modes->count; ++k)
            best = std::max(best, 1.0 / std::abs(h_value(*modes, k, taus[i])));
        CHECK(scan.norms[i] == doctest::Approx(best).epsilon(1e-13));
        CHECK(scan.norms[i] * 2.0 * M_PI * taus[i] <= 1.0 + 1e-12);
    }
    CHECK(std::abs(scan.slope + 1.0) <= std::max(3.0 * scan.slope_stderr, 0.02));
    CHECK(scan.bound_constant <= 1.0 / (2.0 * M_PI) + 1e-12);
}

TEST_CASE("a spectral shift moves the diagonal extremes with it") {
    const FiberModel model = free_layer(600.0);
    const std::vector<double> taus = {3.0, 6.0, 12.0};
    const cd lambda(5.0, 0.0);
    const DecayScan scan =
        thomas_decay_scan(model, lambda, Eigen::VectorXd::Zero(1), taus, 0.0, 600.0);
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 600.0);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        double best = 0.0;
        for (std::size_t k = 0; k < modes->count; ++k)
            best = std::max(best, 1.0 / std::abs(h_value(*modes, k, taus[i]) - lambda));
        CHECK(scan.norms[i] == doctest::Approx(best).epsilon(1e-13));
    }
}

TEST_CASE("decay scan rejects malformed grids") {
    const FiberModel model = free_layer(200.0);
    const Eigen::VectorXd xi = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(thomas_decay_scan(model, 0.0, xi, {}), std::invalid_argument);
    CHECK_THROWS_AS(thomas_decay_scan(model, 0.0, xi, {2.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(thomas_decay_scan(model, 0.0, xi, {-1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("seeded unit vectors are reproducible and unit length") {
    const Eigen::VectorXcd a = random_unit_vector(257, 42, 3);
    const Eigen::VectorXcd b = random_unit_vector(257, 42, 3);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);

    const Eigen::VectorXcd c = random_unit_vector(257, 42, 4);
    CHECK((a - c).cwiseAbs().maxCoeff() > 1e-3);
    CHECK_THROWS_AS(random_unit_vector(0, 1, 0), std::invalid_argument);
}

TEST_CASE("the polar probe reproduces |H0| exactly without a potential") {
    const FiberModel model = free_layer(800.0);
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 800.0);
    const double tau = 17.0;

    Eigen::VectorXcd u = random_unit_vector(static_cast<long>(modes->count), 7, 0);
    const ProbeResult r = lower_bound_probe(model, modes, tau, u, 0.5);
    CHECK(std::abs(r.v_term) < 1e-12);
    CHECK(std::abs(r.sigma_term) == 0.0);
    CHECK(std::abs(r.total - r.h0_term) < 1e-13 * std::abs(r.h0_term));
    CHECK(r.h0_real);
    CHECK(r.h0_lower);
    CHECK(r.ratio >= 2.0 * M_PI - 1e-10);

    // concentrating u on one mode turns (H0 u, v) into |h| for that mode
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<long>(modes->count));
    const std::size_t pick = modes->count / 3;
    e[static_cast<long>(pick)] = 1.0;
    const ProbeResult s = lower_bound_probe(model, modes, tau, e, 0.5);
    CHECK(s.h0_term.real() ==
          doctest::Approx(std::abs(h_value(*modes, pick, tau))).epsilon(1e-14));
    CHECK(std::abs(s.h0_term.imag()) < 1e-14 * s.h0_term.real());
}

TEST_CASE("probe input validation") {
    const FiberModel model = free_layer(150.0);
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 150.0);
    const long n = static_cast<long>(modes->count);
    const Eigen::VectorXcd u = random_unit_vector(n, 1, 0);
    CHECK_THROWS_AS(lower_bound_probe(model, modes, 0.0, u, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lower_bound_probe(model, modes, 5.0, 2.0 * u, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lower_bound_probe(model, modes, 5.0, u.head(n - 1), 0.5),
                    std::invalid_argument);
}

TEST_CASE("the probe survives a bounded potential for every seed") {
    const double tau = 40.0;
    const FiberModel model = mathieu_layer(2600.0);
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 2600.0);
    const long n = static_cast<long>(modes->count);
    for (int seed = 0; seed < 20; ++seed) {
        const Eigen::VectorXcd u = random_unit_vector(n, 99, seed);
        // sup |2 cos| = 2 bounds the potential term uniformly
        const ProbeResult r = lower_bound_probe(model, modes, tau, u, 0.0, 2.0);
        CHECK(r.h0_real);
        CHECK(r.h0_lower);
        CHECK(std::abs(r.v_term) <= 2.0 + 1e-10);
        CHECK(r.dominated);
        CHECK(r.ratio >= (2.0 * M_PI * tau - 2.0) / tau - 1e-10);
    }
}

TEST_CASE("band variation flags an injected flat row") {
    const FiberModel model = mathieu_layer(900.0);
    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 900.0);
    const BandVariationReport rep = band_variation_report(model, modes, 6, 33, 1e-8);
    CHECK(rep.summary.flat_bands.empty());
    CHECK(rep.summary.variation.minCoeff() > 1e-6);

    BandTable doctored = rep.table;
    doctored.bands.row(3).setConstant(7.25);
    const VariationSummary v = band_total_variation(doctored, 1e-8);
    REQUIRE(v.flat_bands.size() == 1);
    CHECK(v.flat_bands[0] == 3);
    CHECK(v.variation[3] == 0.0);
}

TEST_CASE("trace decay agrees with an explicit singular value computation") {
    const Lattice lat = line_lattice();
    std::map<BoundarySigma::Key, cd> face;
    face[{1}] = 0.5;
    face[{-1}] = 0.5; // sigma = cos(2 pi t) on both faces
    const BoundarySigma sigma(1, face, face);
    const FiberModel model{lat, interval_cs(400.0, Bc::Neumann), PotentialSpec::zero(lat),
                           sigma};

    const std::vector<double> taus = {2.0, 8.0};
    const int qn = 16;
    const TraceDecayReport rep =
        robin_trace_decay(model, Eigen::VectorXd::Zero(1), taus, 400.0, qn);
    REQUIRE(rep.c_tilde.size() == 2);

    const auto modes = build_modes(model, Eigen::VectorXd::Zero(1), 400.0);
    const ModeSet& ms = *modes;
    const CrossSection& cs = *model.cross_section;
    const double cw = lat.cell_volume() / qn;
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        Eigen::MatrixXcd map(2 * qn, static_cast<long>(ms.count));
        for (long t = 0; t < qn; ++t) {
            const double tf = double(t) / qn;
            const double sig = std::cos(2.0 * M_PI * tf);
            const double sq = std::sqrt(std::abs(sig) * cw);
            for (std::size_t i = 0; i < ms.count; ++i) {
                const double ang = (2.0 * M_PI * ms.coords(i)[0] + M_PI) * tf;
                const cd phase = std::polar(1.0, ang);
                const double damp = 1.0 / std::sqrt(std::abs(h_value(ms, i, taus[ti])));
                map(t, static_cast<long>(i)) =
                    sq * phase * cs.endpoint_value(ms.j[i], false) * damp;
                map(qn + t, static_cast<long>(i)) =
                    sq * phase * cs.endpoint_value(ms.j[i], true) * damp;
            }
        }
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(map);
        CHECK(rep.c_tilde[ti] == doctest::Approx(svd.singularValues()[0]).epsilon(1e-10));
    }
    CHECK(rep.c_tilde[1] < rep.c_tilde[0]);

    // scaling sigma by s scales the trace constant by sqrt(s)
    FiberModel scaled = model;
    scaled.sigma = sigma.scaled(4.0);
    const TraceDecayReport rep4 =
        robin_trace_decay(scaled, Eigen::VectorXd::Zero(1), taus, 400.0, qn);
    for (std::size_t ti = 0; ti < taus.size(); ++ti)
        CHECK(rep4.c_tilde[ti] == doctest::Approx(2.0 * rep.c_tilde[ti]).epsilon(1e-10));
}

TEST_CASE("trace decay input validation") {
    const FiberModel bare = free_layer(100.0, Bc::Neumann);
    CHECK_THROWS_AS(robin_trace_decay(bare, Eigen::VectorXd::Zero(1), {2.0}),
                    std::invalid_argument);

    std::map<BoundarySigma::Key, cd> face;
    face[{0}] = 1.0;
    const BoundarySigma sigma(1, face, face);
    FiberModel model = bare;
    model.sigma = sigma;
    CHECK_THROWS_AS(robin_trace_decay(model, Eigen::VectorXd::Zero(1), {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        robin_trace_decay(model, Eigen::VectorXd::Zero(1), std::vector<double>{}),
        std::invalid_argument);
}

TEST_CASE("the perturbed scan keeps the free decay rate") {
    const std::vector<double> taus = log_grid(20.0, 60.0, 6);
    const double cap = default_lambda_max(taus.back());
    const FiberModel model = mathieu_layer(cap);
    const DecayScan scan = thomas_decay_scan(model, 0.0, Eigen::VectorXd::Zero(1), taus);
    for (double n : scan.norms) CHECK(std::isfinite(n));
    CHECK(scan.slope <= -0.8);
}
