#include "thomaslab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "thomaslab/csv.hpp"
#include "thomaslab/quadrature.hpp"
#include "thomaslab/verifier.hpp"

namespace tlab {

using nlohmann::json;

namespace {

// NaN and infinities have no JSON number form; spell them out instead of
// letting the serializer silently emit null.
json json_num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

struct TaskContext {
    const RunConfig& cfg;
    std::filesystem::path out;
    int threads = 1;
    json summary = json::object();
    json assertions = json::array();
    std::vector<std::string> artifacts = {};

    AssemblyOptions assembly() const {
        return AssemblyOptions{cfg.numeric.force_dense, cfg.numeric.dense_cap};
    }

    std::string artifact_path(const std::string& name) {
        artifacts.push_back(name);
        return (out / name).string();
    }

    void record(const std::string& name, bool pass, json detail) {
        assertions.push_back({{"name", name}, {"pass", pass}, {"detail", std::move(detail)}});
    }

    bool all_pass() const {
        for (const auto& a : assertions)
            if (!a.at("pass").get<bool>()) return false;
        return true;
    }
};

double max_tau(const std::vector<double>& taus) {
    double t = 0;
    for (double v : taus) t = std::max(t, std::abs(v));
    return t;
}

// Generous cap for band computations: the lowest B bands of these models sit
// far below this, so the truncation error is negligible against the 1e-6
// stability budget.
double lambda_for_bands(int bands) { return 40.0 * (bands + 4.0) * (bands + 4.0) + 200.0; }

void run_bands(TaskContext& ctx, const BandsTask& t) {
    const double cap = ctx.cfg.numeric.lambda_max > 0 ? ctx.cfg.numeric.lambda_max
                                                      : lambda_for_bands(t.bands);
    const FiberModel model = ctx.cfg.make_model(cap);
    const auto modes = build_modes(model, t.xi_perp, cap);
    const BandVariationReport rep =
        band_variation_report(model, modes, t.bands, t.grid, t.flat_threshold, ctx.assembly());

    std::vector<std::string> cols{"theta"};
    for (int b = 1; b <= t.bands; ++b) cols.push_back("band_" + std::to_string(b));
    CsvWriter csv(ctx.artifact_path("bands.csv"), cols);
    for (long g = 0; g < static_cast<long>(rep.table.thetas.size()); ++g) {
        std::vector<double> row{rep.table.thetas[g]};
        for (int b = 0; b < t.bands; ++b) row.push_back(rep.table.bands(b, g));
        csv.row(row);
    }
    csv.close();

    json variation = json::array();
    for (long b = 0; b < rep.summary.variation.size(); ++b)
        variation.push_back(json_num(rep.summary.variation[b]));
    ctx.summary["variation"] = variation;
    ctx.summary["flat_bands"] = rep.summary.flat_bands;
    ctx.summary["flat_threshold"] = json_num(rep.summary.threshold);
    ctx.summary["mode_count"] = modes->count;

    if (!std::isnan(t.min_variation)) {
        const double least = rep.summary.variation.minCoeff();
        ctx.record("band_variation", least > t.min_variation,
                   {{"least_variation", json_num(least)},
                    {"required_above", json_num(t.min_variation)}});
    }
}

void run_thomas(TaskContext& ctx, const ThomasTask& t) {
    const double cap = ctx.cfg.numeric.lambda_max > 0 ? ctx.cfg.numeric.lambda_max
                                                      : default_lambda_max(max_tau(t.taus));
    const FiberModel model = ctx.cfg.make_model(cap);
    const DecayScan scan = thomas_decay_scan(model, t.lambda, t.xi_perp, t.taus, t.tau_min_fit,
                                             cap, ctx.threads, ctx.assembly());

    CsvWriter csv(ctx.artifact_path("thomas.csv"), {"tau", "resolvent_norm", "norm_times_tau"});
    for (std::size_t i = 0; i < scan.taus.size(); ++i)
        csv.row({scan.taus[i], scan.norms[i], scan.norms[i] * scan.taus[i]});
    csv.close();

    ctx.summary["slope"] = json_num(scan.slope);
    ctx.summary["slope_stderr"] = json_num(scan.slope_stderr);
    ctx.summary["rms_residual"] = json_num(scan.rms_residual);
    ctx.summary["bound_constant"] = json_num(scan.bound_constant);
    ctx.summary["tau_min_fit"] = json_num(scan.tau_min_fit);
    ctx.summary["lambda_max"] = json_num(cap);

    if (!std::isnan(t.max_slope))
        ctx.record("decay_slope", scan.slope <= t.max_slope,
                   {{"slope", json_num(scan.slope)}, {"required_below", json_num(t.max_slope)}});
    if (t.require_finite)
        ctx.record("finite_bound", std::isfinite(scan.bound_constant),
                   {{"bound_constant", json_num(scan.bound_constant)}});
}

void run_clusters(TaskContext& ctx, const ClustersTask& t) {
    const double cap = static_cast<double>(t.k_max) * t.k_max;
    ClusterContext cc;
    if (t.spectrum == "fiber") {
        const FiberModel model = ctx.cfg.make_model(cap);
        const auto modes = build_modes(model, t.xi_perp, cap);
        cc = fiber_context(model.cross_section, modes, model.lattice.cell_volume());
    } else {
        cc = manifold_context(ctx.cfg.make_cross_section(cap));
    }

    NormOptions opts = t.norm;
    opts.seed = ctx.cfg.numeric.seed;

    CsvWriter csv(ctx.artifact_path("clusters.csv"), {"k", "N_k", "q", "lower", "upper", "exact"});
    std::vector<double> ks, lowers, uppers;
    bool all_exact = true;
    for (int k = t.k_min; k <= t.k_max; ++k) {
        const ClusterNormEntry e = cluster_norm(cc, k, t.q, opts);
        csv.row({static_cast<double>(e.k), static_cast<double>(e.rank), e.q, e.lower, e.upper,
                 e.exact ? 1.0 : 0.0});
        if (e.rank > 0) {
            ks.push_back(k);
            lowers.push_back(e.lower);
            uppers.push_back(e.upper);
        }
        all_exact = all_exact && e.exact;
    }
    csv.close();

    const ExponentFit fit = fit_cluster_exponent(ks, lowers, t.q);
    ctx.summary["slope"] = json_num(fit.slope);
    ctx.summary["epsilon"] = json_num(fit.epsilon);
    ctx.summary["rms_residual"] = json_num(fit.rms_residual);
    ctx.summary["points"] = fit.count;
    ctx.summary["exact"] = all_exact;
    if (!all_exact) {
        const ExponentFit ufit = fit_cluster_exponent(ks, uppers, t.q);
        ctx.summary["upper_slope"] = json_num(ufit.slope);
    }
    if (t.regime) {
        const int d = ctx.cfg.cs_spec.dim() + (ctx.cfg.lattice ? ctx.cfg.lattice->dim() : 0);
        ctx.summary["reference_exponent"] = json_num(reference_exponent(d, t.q, *t.regime));
    }

    if (!std::isnan(t.slope_min))
        ctx.record("slope_min", fit.slope >= t.slope_min,
                   {{"slope", json_num(fit.slope)}, {"required_above", json_num(t.slope_min)}});
    if (!std::isnan(t.slope_max))
        ctx.record("slope_max", fit.slope <= t.slope_max,
                   {{"slope", json_num(fit.slope)}, {"required_below", json_num(t.slope_max)}});
}

void run_lemma_sums(TaskContext& ctx, const LemmaSumsTask& t) {
    std::vector<double> s1(t.taus.size()), s2(t.taus.size());
    parallel_for(t.taus.size(), ctx.threads, [&](std::size_t i) {
        const LemmaSums s = lemma_sums(t.eps, t.taus[i]);
        s1[i] = s.s1;
        s2[i] = s.s2;
    });

    std::vector<double> weighted, exceptional;
    if (t.weighted) {
        int k_max = t.k_max;
        const int k_need = 2 * static_cast<int>(std::ceil(max_tau(t.taus)));
        k_max = std::max(k_max, k_need);
        const FiberModel model = ctx.cfg.make_model(static_cast<double>(k_max) * k_max);
        const ClusterExtremes ext = build_cluster_extremes(
            model.lattice, *model.cross_section, t.xi_perp, k_max);
        weighted.resize(t.taus.size());
        exceptional.resize(t.taus.size());
        parallel_for(t.taus.size(), ctx.threads, [&](std::size_t i) {
            const WeightedSumResult w = weighted_cluster_sum(ext, t.eps, t.taus[i]);
            weighted[i] = w.value;
            exceptional[i] = w.exceptional_term;
        });
        ctx.summary["k_max"] = k_max;
    }

    std::vector<std::string> cols{"tau", "s1", "s2"};
    if (t.weighted) {
        cols.push_back("weighted");
        cols.push_back("exceptional");
    }
    CsvWriter csv(ctx.artifact_path("lemma_sums.csv"), cols);
    for (std::size_t i = 0; i < t.taus.size(); ++i) {
        std::vector<double> row{t.taus[i], s1[i], s2[i]};
        if (t.weighted) {
            row.push_back(weighted[i]);
            row.push_back(exceptional[i]);
        }
        csv.row(row);
    }
    csv.close();

    auto series_max = [](const std::vector<double>& v, const std::vector<double>& taus,
                         bool high) {
        double out = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            if ((taus[i] >= 1e3) == high) out = std::max(out, v[i]);
        return out;
    };
    bool finite = true;
    for (double v : s1) finite = finite && std::isfinite(v);
    for (double v : s2) finite = finite && std::isfinite(v);
    for (double v : weighted) finite = finite && std::isfinite(v);
    ctx.summary["max_s1"] = json_num(*std::max_element(s1.begin(), s1.end()));
    ctx.summary["max_s2"] = json_num(*std::max_element(s2.begin(), s2.end()));
    if (t.weighted)
        ctx.summary["max_weighted"] =
            json_num(*std::max_element(weighted.begin(), weighted.end()));
    ctx.record("finite", finite, json::object());

    if (t.assert_uniform) {
        bool uniform = series_max(s1, t.taus, true) <= series_max(s1, t.taus, false) &&
                       series_max(s2, t.taus, true) <= series_max(s2, t.taus, false);
        if (t.weighted)
            uniform = uniform &&
                      series_max(weighted, t.taus, true) <= series_max(weighted, t.taus, false);
        ctx.record("uniform_bound", uniform,
                   {{"s1_high", json_num(series_max(s1, t.taus, true))},
                    {"s1_low", json_num(series_max(s1, t.taus, false))},
                    {"s2_high", json_num(series_max(s2, t.taus, true))},
                    {"s2_low", json_num(series_max(s2, t.taus, false))}});
    }
}

void run_robin(TaskContext& ctx, const RobinTask& t) {
    if (!ctx.cfg.sigma)
        throw ConfigError("model.sigma", "robin-trace needs a boundary weight");
    const double cap = ctx.cfg.numeric.lambda_max > 0 ? ctx.cfg.numeric.lambda_max
                                                      : default_lambda_max(max_tau(t.taus));
    const FiberModel model = ctx.cfg.make_model(cap);
    const TraceDecayReport rep =
        robin_trace_decay(model, t.xi_perp, t.taus, cap, t.quad_nodes);

    CsvWriter csv(ctx.artifact_path("robin_trace.csv"), {"tau", "c_tilde"});
    for (std::size_t i = 0; i < rep.taus.size(); ++i) csv.row({rep.taus[i], rep.c_tilde[i]});
    csv.close();

    ctx.summary["first"] = json_num(rep.c_tilde.front());
    ctx.summary["last"] = json_num(rep.c_tilde.back());
    if (t.assert_halving)
        ctx.record("trace_halving", rep.c_tilde.back() < 0.5 * rep.c_tilde.front(),
                   {{"first", json_num(rep.c_tilde.front())},
                    {"last", json_num(rep.c_tilde.back())}});
}

void run_probe(TaskContext& ctx, const ProbeTask& t) {
    const double cap = ctx.cfg.numeric.lambda_max > 0 ? ctx.cfg.numeric.lambda_max
                                                      : default_lambda_max(std::abs(t.tau));
    const FiberModel model = ctx.cfg.make_model(cap);
    const auto modes = build_modes(model, t.xi_perp, cap);

    CsvWriter csv(ctx.artifact_path("probe.csv"),
                  {"index", "h0_re", "h0_im", "v_re", "v_im", "sigma_re", "sigma_im", "total_re",
                   "total_im", "ratio"});
    bool all_ok = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < t.count; ++i) {
        const Eigen::VectorXcd u = random_unit_vector(static_cast<long>(modes->count),
                                                      ctx.cfg.numeric.seed, i);
        const ProbeResult r = lower_bound_probe(model, modes, t.tau, u, t.delta,
                                                std::numeric_limits<double>::quiet_NaN(),
                                                ctx.assembly());
        csv.row({static_cast<double>(i), r.h0_term.real(), r.h0_term.imag(), r.v_term.real(),
                 r.v_term.imag(), r.sigma_term.real(), r.sigma_term.imag(), r.total.real(),
                 r.total.imag(), r.ratio});
        all_ok = all_ok && r.h0_real && r.h0_lower;
        min_ratio = std::min(min_ratio, r.ratio);
    }
    csv.close();

    ctx.summary["min_ratio"] = json_num(min_ratio);
    ctx.summary["mode_count"] = modes->count;
    if (t.assert_lower) ctx.record("h0_lower_bound", all_ok, {{"count", t.count}});
}

} // namespace

std::string default_out_dir() {
    if (const char* env = std::getenv("THOMAS_LAB_OUT"); env && *env) return env;
    return "out";
}

RunOutcome run_task(const RunConfig& cfg, const std::string& out_dir, int threads) {
    const auto start = std::chrono::steady_clock::now();
    TaskContext ctx{cfg, std::filesystem::path(out_dir), std::max(threads, 1)};
    std::filesystem::create_directories(ctx.out);

    std::visit(
        [&](const auto& task) {
            using T = std::decay_t<decltype(task)>;
            if constexpr (std::is_same_v<T, BandsTask>) run_bands(ctx, task);
            else if constexpr (std::is_same_v<T, ThomasTask>) run_thomas(ctx, task);
            else if constexpr (std::is_same_v<T, ClustersTask>) run_clusters(ctx, task);
            else if constexpr (std::is_same_v<T, LemmaSumsTask>) run_lemma_sums(ctx, task);
            else if constexpr (std::is_same_v<T, RobinTask>) run_robin(ctx, task);
            else run_probe(ctx, task);
        },
        cfg.task);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunOutcome outcome;
    std::ostringstream hash;
    hash << std::hex << cfg.content_hash;
    outcome.report = {{"task", cfg.task_name},
                      {"config_hash", hash.str()},
                      {"config", cfg.raw},
                      {"artifacts", ctx.artifacts},
                      {"summary", ctx.summary},
                      {"assertions", ctx.assertions},
                      {"timings", {{"total_seconds", seconds}}}};
    outcome.exit_code = ctx.all_pass() ? 0 : 1;
    outcome.report["status"] = outcome.exit_code == 0 ? "pass" : "assertion-failure";

    std::ofstream rep(ctx.out / "run_report.json");
    rep << outcome.report.dump(2) << '\n';
    return outcome;
}

} // namespace tlab
