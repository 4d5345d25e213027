#include "thomaslab/verifier.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "thomaslab/csv.hpp"
#include "thomaslab/quadrature.hpp"
#include "thomaslab/rng.hpp"

namespace tlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_tau_grid(const std::vector<double>& taus) {
    if (taus.empty()) throw std::invalid_argument("empty tau grid");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0)) throw std::invalid_argument("tau grid entries must be positive");
        if (i > 0 && taus[i] <= taus[i - 1])
            throw std::invalid_argument("tau grid must be strictly increasing");
    }
}

} // namespace

DecayScan thomas_decay_scan(const FiberModel& model, std::complex<double> lambda,
                            const Eigen::VectorXd& xi_perp, const std::vector<double>& taus,
                            double tau_min_fit, double lambda_max, int threads,
                            const AssemblyOptions& opts) {
    check_tau_grid(taus);
    if (lambda_max <= 0) lambda_max = default_lambda_max(taus.back());
    const auto modes = build_modes(model, xi_perp, lambda_max);

    DecayScan scan;
    scan.lambda = lambda;
    scan.xi_perp = xi_perp;
    scan.taus = taus;
    scan.tau_min_fit = tau_min_fit;
    scan.norms.assign(taus.size(), 0.0);
    parallel_for(taus.size(), threads, [&](std::size_t i) {
        scan.norms[i] = resolvent_norm(assemble_thomas(model, modes, taus[i], lambda, opts));
    });

    std::vector<double> ft, fn;
    scan.bound_constant = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        scan.bound_constant = std::max(scan.bound_constant, scan.norms[i] * taus[i]);
        if (taus[i] >= tau_min_fit && std::isfinite(scan.norms[i]) && scan.norms[i] > 0) {
            ft.push_back(taus[i]);
            fn.push_back(scan.norms[i]);
        }
    }
    if (ft.size() >= 2) {
        const LineFit f = fit_loglog(ft, fn);
        scan.slope = f.slope;
        scan.slope_stderr = f.slope_stderr;
        scan.rms_residual = f.rms_residual;
    } else {
        scan.slope = scan.slope_stderr = scan.rms_residual = kNaN;
    }
    return scan;
}

Eigen::VectorXcd random_unit_vector(long n, std::uint64_t seed, std::uint64_t stream) {
    if (n < 1) throw std::invalid_argument("vector length must be positive");
    CounterRng rng(seed, stream);
    Eigen::VectorXcd v(n);
    for (long i = 0; i < n; ++i) v[i] = {rng.normal(2 * i), rng.normal(2 * i + 1)};
    const double nv = v.norm();
    if (nv == 0) throw std::logic_error("degenerate random vector");
    return v / nv;
}

ProbeResult lower_bound_probe(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                              double tau, const Eigen::VectorXcd& u, double delta,
                              double c_delta, const AssemblyOptions& opts) {
    if (!modes || modes->count == 0) throw std::invalid_argument("empty mode set");
    if (tau == 0) throw std::invalid_argument("the probe needs tau != 0");
    if (u.size() != static_cast<long>(modes->count))
        throw std::invalid_argument("coefficient vector size does not match the mode set");
    if (std::abs(u.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("probe vector must have unit norm");
    const ModeSet& ms = *modes;

    const PhaseWeights pw = phase_and_weights(ms, tau);
    Eigen::VectorXcd v(u.size());
    for (long i = 0; i < u.size(); ++i) v[i] = pw.phase[i] * u[i];

    ProbeResult r;
    r.tau = tau;
    r.delta = delta;
    r.c_delta = c_delta;

    std::complex<double> h0 = 0;
    for (long i = 0; i < u.size(); ++i) {
        const std::complex<double> h = h_value(ms, static_cast<std::size_t>(i), tau);
        h0 += h * u[i] * std::conj(v[i]);
    }
    r.h0_term = h0;

    FiberModel no_sigma = model;
    no_sigma.sigma.reset();
    const GalerkinMatrix av = assemble_thomas(no_sigma, modes, tau, 0.0, opts);
    const Eigen::VectorXcd av_u = av.apply(u);
    r.v_term = v.dot(av_u) - h0; // (A_V u, v) minus the diagonal part
    if (model.sigma) {
        const GalerkinMatrix afull = assemble_thomas(model, modes, tau, 0.0, opts);
        r.total = v.dot(afull.apply(u));
        r.sigma_term = r.total - h0 - r.v_term;
    } else {
        r.total = h0 + r.v_term;
        r.sigma_term = 0;
    }
    r.ratio = std::abs(r.total) / std::abs(tau);
    r.h0_real = std::abs(h0.imag()) <= 1e-10 * std::abs(h0);
    r.h0_lower = h0.real() >= 2.0 * M_PI * std::abs(tau) - 1e-8;
    const double cd = std::isnan(c_delta) ? 0.0 : c_delta;
    r.dominated = std::abs(r.total) >= (1.0 - delta) * h0.real() - cd;
    return r;
}

VariationSummary band_total_variation(const BandTable& table, double threshold) {
    VariationSummary s;
    s.threshold = threshold;
    const long bands = table.bands.rows();
    s.variation.resize(bands);
    for (long b = 0; b < bands; ++b) {
        double tv = 0;
        for (long g = 0; g + 1 < table.bands.cols(); ++g)
            tv += std::abs(table.bands(b, g + 1) - table.bands(b, g));
        s.variation[b] = tv;
        if (tv < threshold) s.flat_bands.push_back(static_cast<int>(b));
    }
    return s;
}

BandVariationReport band_variation_report(const FiberModel& model,
                                          std::shared_ptr<const ModeSet> modes, int bands,
                                          int grid, double flat_threshold,
                                          const AssemblyOptions& opts) {
    BandVariationReport rep;
    rep.table = band_functions(model, std::move(modes), bands, grid, opts);
    rep.summary = band_total_variation(rep.table, flat_threshold);
    return rep;
}

TraceDecayReport robin_trace_decay(const FiberModel& model, const Eigen::VectorXd& xi_perp,
                                   const std::vector<double>& taus, double lambda_max,
                                   int quad_nodes_per_dim) {
    if (!model.sigma) throw std::invalid_argument("trace decay needs a boundary weight");
    for (double t : taus)
        if (t == 0) throw std::invalid_argument("tau = 0 is excluded from the trace decay scan");
    if (taus.empty()) throw std::invalid_argument("empty tau grid");
    double tau_abs_max = 0;
    for (double t : taus) tau_abs_max = std::max(tau_abs_max, std::abs(t));
    if (lambda_max <= 0) lambda_max = default_lambda_max(tau_abs_max);
    const auto modes_ptr = build_modes(model, xi_perp, lambda_max);
    const ModeSet& ms = *modes_ptr;
    const CrossSection& cs = *model.cross_section;
    const Lattice& lat = model.lattice;
    const int m = lat.dim();

    // Quadrature nodes on the cell (shared by both faces).
    int qn = std::max(quad_nodes_per_dim, 4);
    while (std::pow(static_cast<double>(qn), m) > 65536.0 && qn > 4) --qn;
    long nodes = 1;
    for (int d = 0; d < m; ++d) nodes *= qn;
    const double cw = lat.cell_volume() / static_cast<double>(nodes);

    Eigen::MatrixXd tfrac(nodes, m);
    for (long t = 0; t < nodes; ++t) {
        long rem = t;
        for (int d = m - 1; d >= 0; --d) {
            tfrac(t, d) = static_cast<double>(rem % qn) / qn;
            rem /= qn;
        }
    }

    // sqrt(|sigma| * weight) per node and face.
    Eigen::VectorXd s0(nodes), sa(nodes);
    for (long t = 0; t < nodes; ++t) {
        const Eigen::VectorXd tf = tfrac.row(t).transpose();
        s0[t] = std::sqrt(std::abs(model.sigma->eval(false, tf)) * cw);
        sa[t] = std::sqrt(std::abs(model.sigma->eval(true, tf)) * cw);
    }

    // Group the modes by their longitudinal offset n; within a group only the
    // cross-section factors differ, so the Gram matrix of the trace map is a
    // sum of one outer product per group.
    std::map<std::vector<int>, int> group_of;
    std::vector<int> group(ms.count);
    std::vector<int> key(m);
    for (std::size_t i = 0; i < ms.count; ++i) {
        key.assign(ms.coords(i), ms.coords(i) + m);
        auto [it, fresh] = group_of.try_emplace(key, static_cast<int>(group_of.size()));
        group[i] = it->second;
        (void)fresh;
    }
    const int ngroups = static_cast<int>(group_of.size());

    // Phase of e^{i <n + pi b1 + xi_perp, y_t>} per group and node.
    Eigen::MatrixXcd phases(nodes, ngroups);
    {
        const Eigen::VectorXd shift = M_PI * lat.b1() + xi_perp;
        for (const auto& [nu, g] : group_of) {
            for (long t = 0; t < nodes; ++t) {
                double ang = 0;
                for (int d = 0; d < m; ++d) ang += 2.0 * M_PI * nu[d] * tfrac(t, d);
                const Eigen::VectorXd y = lat.basis().transpose() * tfrac.row(t).transpose();
                ang += shift.dot(y);
                phases(t, g) = std::polar(1.0, ang);
            }
        }
    }

    std::map<int, double> e0, ea;
    for (int jv : ms.j_of_range) {
        e0[jv] = cs.endpoint_value(jv, false);
        ea[jv] = cs.endpoint_value(jv, true);
    }

    TraceDecayReport rep;
    rep.taus = taus;
    rep.c_tilde.reserve(taus.size());
    Eigen::VectorXd acc_a(ngroups), acc_b(ngroups), acc_c(ngroups);
    for (double tau : taus) {
        acc_a.setZero();
        acc_b.setZero();
        acc_c.setZero();
        for (std::size_t i = 0; i < ms.count; ++i) {
            const double inv_h = 1.0 / std::abs(h_value(ms, i, tau));
            const double v0 = e0.at(ms.j[i]), va = ea.at(ms.j[i]);
            acc_a[group[i]] += v0 * v0 * inv_h;
            acc_b[group[i]] += v0 * va * inv_h;
            acc_c[group[i]] += va * va * inv_h;
        }
        Eigen::MatrixXcd g00 = Eigen::MatrixXcd::Zero(nodes, nodes);
        Eigen::MatrixXcd g0a = Eigen::MatrixXcd::Zero(nodes, nodes);
        Eigen::MatrixXcd gaa = Eigen::MatrixXcd::Zero(nodes, nodes);
        for (int g = 0; g < ngroups; ++g) {
            const Eigen::VectorXcd u = phases.col(g).cwiseProduct(s0.cast<std::complex<double>>());
            const Eigen::VectorXcd w = phases.col(g).cwiseProduct(sa.cast<std::complex<double>>());
            g00.noalias() += acc_a[g] * u * u.adjoint();
            g0a.noalias() += acc_b[g] * u * w.adjoint();
            gaa.noalias() += acc_c[g] * w * w.adjoint();
        }
        Eigen::MatrixXcd gram(2 * nodes, 2 * nodes);
        gram.topLeftCorner(nodes, nodes) = g00;
        gram.topRightCorner(nodes, nodes) = g0a;
        gram.bottomLeftCorner(nodes, nodes) = g0a.adjoint();
        gram.bottomRightCorner(nodes, nodes) = gaa;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (gram + gram.adjoint()),
                                                           Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        rep.c_tilde.push_back(std::sqrt(std::max(top, 0.0)));
    }
    return rep;
}

} // namespace tlab
