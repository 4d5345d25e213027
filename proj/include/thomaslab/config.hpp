#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "thomaslab/clusters.hpp"
#include "thomaslab/galerkin.hpp"
#include "thomaslab/potential.hpp"

namespace tlab {

// Schema violation. `path` is the dotted location of the offending key so
// error messages point at the config file, not at internals.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct BandsTask {
    int bands = 8;
    int grid = 64;
    Eigen::VectorXd xi_perp;
    double flat_threshold = 1e-8;
    // pass iff every band varies by more than this (skipped when NaN)
    double min_variation = std::numeric_limits<double>::quiet_NaN();
};

struct ThomasTask {
    std::complex<double> lambda{0, 0};
    Eigen::VectorXd xi_perp;
    std::vector<double> taus;
    double tau_min_fit = 0;
    double max_slope = std::numeric_limits<double>::quiet_NaN();
    bool require_finite = false;
};

struct ClustersTask {
    // "cross-section": spectrum of the compact factor alone;
    // "fiber": joint truncated spectrum at a fixed quasimomentum offset
    std::string spectrum = "cross-section";
    double q = std::numeric_limits<double>::infinity();
    int k_min = 10;
    int k_max = 40;
    Eigen::VectorXd xi_perp;
    NormOptions norm;
    std::optional<Regime> regime; // reference exponent reported when set
    double slope_min = std::numeric_limits<double>::quiet_NaN();
    double slope_max = std::numeric_limits<double>::quiet_NaN();
};

struct LemmaSumsTask {
    double eps = 0.1;
    std::vector<double> taus;
    bool weighted = false; // also evaluate the lattice-weighted sum
    int k_max = 0;         // cluster range for the weighted sum; 0 = sized by max tau
    Eigen::VectorXd xi_perp;
    bool assert_uniform = false; // max over tau >= 1e3 must not exceed max below
};

struct RobinTask {
    std::vector<double> taus;
    int quad_nodes = 256;
    Eigen::VectorXd xi_perp;
    bool assert_halving = false; // c~ at the last tau < half of the first
};

struct ProbeTask {
    double tau = 100;
    int count = 100;
    double delta = 0.5;
    Eigen::VectorXd xi_perp;
    bool assert_lower = true; // every probe passes the reality and 2 pi tau checks
};

using TaskSpec =
    std::variant<BandsTask, ThomasTask, ClustersTask, LemmaSumsTask, RobinTask, ProbeTask>;

struct NumericBlock {
    double lambda_max = 0; // 0 = sized automatically from the largest tau
    long dense_cap = 4000;
    bool force_dense = false;
    std::uint64_t seed = 1234;
};

struct RunConfig {
    nlohmann::json raw;
    std::uint64_t content_hash = 0;

    CrossSectionSpec cs_spec;
    std::optional<Lattice> lattice; // absent for pure cross-section cluster runs
    std::optional<PotentialSpec> potential;
    std::optional<BoundarySigma> sigma;
    double declared_p = 0; // 0 = not declared

    std::string task_name;
    TaskSpec task;
    NumericBlock numeric;

    bool has_model() const { return lattice.has_value(); }
    // Cross-section eigenpairs complete up to mu_cap.
    std::shared_ptr<const CrossSection> make_cross_section(double mu_cap) const;
    // Throws ConfigError when the config gave no lattice.
    FiberModel make_model(double mu_cap) const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Consistency warnings (never errors): exponent-window checks against the
// declared p and the boundary-weight bookkeeping.
std::vector<std::string> validate_config(const RunConfig& cfg);

} // namespace tlab
