#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "thomaslab/cross_section.hpp"
#include "thomaslab/lattice.hpp"

namespace tlab {

// Quasimomentum on the complexified line (pi + i*tau) b1 + xi_perp.
struct QuasiMomentum {
    Eigen::VectorXd xi_perp;
    double tau = 0;
};

// Throws unless xi_perp is orthogonal to b1 within 1e-12 and has the right
// dimension.
void validate_quasimomentum(const Lattice& lat, const QuasiMomentum& qm);

// Joint modes (j, n) with |n + pi*b1 + xi_perp|^2 + mu_j <= lambda_max,
// ordered j-major with integer coordinates lexicographic inside each j.
//
// Because <n, b1> = 2*pi*n1 holds exactly by duality (n1 the first integer
// coordinate), the eigenvalue along the complexified line factors as
//   h = (2*pi*n1 + pi + i*tau)^2 + (|n_perp + xi_perp|^2 + mu_j),
// which the imaginary-part bound |Im h| >= 2*pi*|tau| inherits exactly.
struct ModeSet {
    int m = 0;
    std::size_t count = 0;
    std::vector<int> j;          // cross-section index, 0-based
    std::vector<int> n1;         // first integer coordinate of n
    std::vector<double> perp2;   // |n_perp + xi_perp|^2 + mu_j
    std::vector<int> ncoords;    // count * m integers
    std::vector<std::pair<std::size_t, std::size_t>> j_ranges; // [begin,end) per j present
    std::vector<int> j_of_range;
    double lambda_max = 0;
    Eigen::VectorXd xi_perp;

    const int* coords(std::size_t i) const { return ncoords.data() + i * m; }
    // |n + pi*b1 + xi_perp|^2 + mu_j, the truncation value
    double base(std::size_t i) const {
        const double A = 2.0 * M_PI * n1[i] + M_PI;
        return A * A + perp2[i];
    }
    // index of (j, coords) or npos
    std::size_t find(int j, const int* coords) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

ModeSet build_mode_set(const Lattice& lat, const CrossSection& cs,
                       const Eigen::VectorXd& xi_perp, double lambda_max);

// Truncation cap rule: modes beyond 4*tau_max^2 + margin cannot dominate the
// resolvent quantities being scanned.
double default_lambda_max(double tau_max, double margin = 100.0);

// Free eigenvalue on the Thomas line.
inline std::complex<double> free_eigenvalue(int n1, double perp2_plus_mu, double tau) {
    const double A = 2.0 * M_PI * n1 + M_PI;
    return {A * A - tau * tau + perp2_plus_mu, 2.0 * tau * A};
}

std::complex<double> h_value(const ModeSet& ms, std::size_t idx, double tau);

// Free eigenvalue at real quasimomentum theta*b1 + xi_perp.
double h_value_real(const ModeSet& ms, std::size_t idx, double theta);

// Explicit-data form used for cross-checking: mode given by mu, the integer
// coordinates and the lattice itself.
std::complex<double> free_eigenvalue_cartesian(const Lattice& lat, double mu,
                                               const std::vector<int>& ncoords,
                                               const Eigen::VectorXd& xi_perp, double tau);

// max over modes of 1/|h|; requires tau != 0 unless no mode has h = 0.
double free_resolvent_norm(const ModeSet& ms, double tau);

struct PhaseWeights {
    Eigen::VectorXcd phase;  // h/|h|
    Eigen::VectorXd weight;  // |h|^{-1/2}
};

PhaseWeights phase_and_weights(const ModeSet& ms, double tau);

} // namespace tlab
