#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "thomaslab/galerkin.hpp"

namespace tlab {

struct DecayScan {
    std::complex<double> lambda;
    Eigen::VectorXd xi_perp;
    std::vector<double> taus;   // strictly increasing, positive
    std::vector<double> norms;  // resolvent norms; +infinity marks a
                                // non-invertible fiber, the scan continues
    double tau_min_fit = 0;
    double slope = 0;           // log-log least squares over tau >= tau_min_fit
    double slope_stderr = 0;
    double rms_residual = 0;
    double bound_constant = 0;  // max over the grid of norm * tau
};

// Resolvent norms of H(pi + i tau) - lambda over the tau grid, one shared
// truncation sized by the largest tau.
DecayScan thomas_decay_scan(const FiberModel& model, std::complex<double> lambda,
                            const Eigen::VectorXd& xi_perp, const std::vector<double>& taus,
                            double tau_min_fit = 0, double lambda_max = 0, int threads = 1,
                            const AssemblyOptions& opts = {});

// Seeded complex unit vector (counter-based, schedule independent).
Eigen::VectorXcd random_unit_vector(long n, std::uint64_t seed, std::uint64_t stream);

struct ProbeResult {
    double tau = 0;
    double delta = 0;
    std::complex<double> h0_term;    // (H0(tau) u, v), v = Phi0(tau) u
    std::complex<double> v_term;     // (V u, v)
    std::complex<double> sigma_term; // boundary contribution, 0 without sigma
    std::complex<double> total;      // (H(tau) u, v)
    double ratio = 0;                // |total| / |tau|
    double c_delta = 0;              // splitting level supplied by the caller (NaN if none)
    bool h0_real = false;            // |Im h0| <= 1e-10 |h0|
    bool h0_lower = false;           // Re h0 >= 2 pi |tau| - 1e-8
    bool dominated = false;          // |total| >= (1 - delta) Re h0 - c_delta
};

// Polar-vector probe: v has coefficients (h/|h|) u, making (H0 u, v) equal
// (|H0| u, u), which is real and at least 2 pi |tau| for a unit u.
ProbeResult lower_bound_probe(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                              double tau, const Eigen::VectorXcd& u, double delta,
                              double c_delta = std::numeric_limits<double>::quiet_NaN(),
                              const AssemblyOptions& opts = {});

struct VariationSummary {
    Eigen::VectorXd variation;  // per-band total variation over the grid
    std::vector<int> flat_bands; // bands with variation below the threshold
    double threshold = 0;
};

// Total variation of each band row; a band flatter than the threshold is
// flagged as suspicious (genuine bands of these models vary far more).
VariationSummary band_total_variation(const BandTable& table, double threshold = 1e-8);

struct BandVariationReport {
    BandTable table;
    VariationSummary summary;
};

BandVariationReport band_variation_report(const FiberModel& model,
                                          std::shared_ptr<const ModeSet> modes, int bands,
                                          int grid, double flat_threshold = 1e-8,
                                          const AssemblyOptions& opts = {});

struct TraceDecayReport {
    std::vector<double> taus;
    std::vector<double> c_tilde; // largest singular value of the weighted trace map
};

// Robin trace decay: c~(tau) is the norm of mode coefficients, damped by
// |h|^{-1/2}, mapped to the two boundary traces weighted by sqrt|sigma| and
// the quadrature weights. Computed from the Gram matrix accumulated per
// longitudinal offset, so the mode count only enters linearly.
TraceDecayReport robin_trace_decay(const FiberModel& model, const Eigen::VectorXd& xi_perp,
                                   const std::vector<double>& taus, double lambda_max = 0,
                                   int quad_nodes_per_dim = 256);

} // namespace tlab
