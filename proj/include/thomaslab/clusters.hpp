#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "thomaslab/cross_section.hpp"
#include "thomaslab/free_operator.hpp"
#include "thomaslab/lattice.hpp"

namespace tlab {

// Spectrum to be sliced into the clusters [(k-1)^2, k^2): either the
// eigenvalues mu_j of a compact manifold alone, or the joint fiber values
// |n + pi b1 + xi_perp|^2 + mu_j when a mode set is attached.
struct ClusterContext {
    std::shared_ptr<const CrossSection> cs;
    std::shared_ptr<const ModeSet> fiber; // null for the manifold spectrum
    double value_cap = 0;
    double cell_volume = 1; // |Omega| normalizing the fiber eigenfunctions

    std::size_t total() const;
    double value(std::size_t idx) const;
    int j_of(std::size_t idx) const;
};

ClusterContext manifold_context(std::shared_ptr<const CrossSection> cs);
ClusterContext fiber_context(std::shared_ptr<const CrossSection> cs,
                             std::shared_ptr<const ModeSet> fiber, double cell_volume);

// Indices with value in [(k-1)^2, k^2); the upper endpoint belongs to the
// next cluster. Requires the context to cover k^2; throws naming the needed
// cap otherwise.
std::vector<std::size_t> cluster_members(const ClusterContext& ctx, int k);

struct ClusterNormEntry {
    int k = 0;
    long rank = 0;
    double q = 0;
    double lower = 0;
    double upper = 0;
    bool exact = false; // lower == upper == the norm (q = 2 or q = infinity)
};

struct NormOptions {
    int starts = 32;        // random starts for the duality maximization
    int max_iter = 40;
    double tol = 1e-8;      // relative change stopping rule
    int sup_res = 4096;     // grid intervals for the q = infinity supremum
    std::uint64_t seed = 1234;
};

// L2 -> Lq norm of the cluster projector. q = 2 is exactly 1 on a nonempty
// cluster; q = infinity is the supremum of sqrt(sum |phi|^2), exact up to the
// sup grid (and closed-form on torus and circle factors, whose eigenfunctions
// have constant modulus). For 2 < q < infinity the result is an honest
// bracket: lower bound from seeded duality iteration (the final iterate's
// norm is evaluated by quadrature that is exact for even integer q), upper
// bound by interpolation with the q = infinity value.
ClusterNormEntry cluster_norm(const ClusterContext& ctx, int k, double q,
                              const NormOptions& opts = {});

enum class Regime { NoBoundary, ProductInterval, BoundaryHighQ, BoundaryLowQ };

// Closed-form growth exponent of ||E_k||_{2->q} in k for each regime;
// rejects (d, q) outside the regime's validity window, naming the window.
double reference_exponent(int d, double q, Regime regime);

struct ExponentFit {
    double q = 0;
    int k_min = 0, k_max = 0;
    double slope = 0;
    double epsilon = 0; // 1/2 - slope
    double rms_residual = 0;
    int count = 0;
};

// Least-squares slope of log(norm) against log(k) over clusters with nonzero
// norm; needs at least 10 of them.
ExponentFit fit_cluster_exponent(const std::vector<double>& ks, const std::vector<double>& norms,
                                 double q);

struct LemmaSums {
    double s1 = 0; // sum_k k^{1-2e} / (|k^2 - t^2| + |t|)
    double s2 = 0; // sum_k k^{1-2e} / (|(k-1)^2 - t^2| + |t|)
};

// Both sums for 0 < eps < 1/2 and |tau| > 1. Terms are summed directly up to
// max(2 ceil|tau|, 2000) and completed with the analytic integral tail
// (geometric expansion of the integrand, Euler-Maclaurin corrected), whose
// own error is far below 1e-10 there.
LemmaSums lemma_sums(double eps, double tau);

// Per-cluster extremes of the fiber values, streamed once so that sums over
// many tau reuse the same enumeration. Covers clusters k = 1..k_max.
struct ClusterExtremes {
    int k_max = 0;
    std::vector<long> count;  // size k_max + 1, index 0 unused
    std::vector<double> lo, hi;
    Eigen::MatrixXd dual_rows;
    Eigen::VectorXd center; // pi b1 + xi_perp, cartesian
    std::vector<double> mus;
    int m = 0;
};

ClusterExtremes build_cluster_extremes(const Lattice& lat, const CrossSection& cs,
                                       const Eigen::VectorXd& xi_perp, int k_max);

struct WeightedSumResult {
    double value = 0;            // includes the tail completion
    double exceptional_term = 0; // term of the cluster straddling tau^2
    int exceptional_k = 0;
    double tail = 0;             // analytic majorant added for k > k_max
};

// sum_k k^{1-2e} * max over cluster members of 1 / (|value - tau^2| + |tau|).
// Away from tau^2 the extreme member is the recorded cluster extreme; in the
// one straddling cluster the nearest value is recomputed exactly. Beyond the
// table the terms are completed by the same tail majorant as lemma_sums' S2.
WeightedSumResult weighted_cluster_sum(const ClusterExtremes& ext, double eps, double tau);

} // namespace tlab
