#include "thomaslab/free_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tlab {

void validate_quasimomentum(const Lattice& lat, const QuasiMomentum& qm) {
    if (qm.xi_perp.size() != lat.dim())
        throw std::invalid_argument("xi_perp dimension does not match the lattice");
    const double ip = std::abs(qm.xi_perp.dot(lat.b1()));
    if (ip > 1e-12)
        throw std::invalid_argument("xi_perp must be orthogonal to b1 (|<xi',b1>| = " +
                                    std::to_string(ip) + ")");
}

std::size_t ModeSet::find(int jj, const int* c) const {
    // j_ranges is ordered by j; coordinates are lexicographic inside a range
    auto rit = std::lower_bound(j_of_range.begin(), j_of_range.end(), jj);
    if (rit == j_of_range.end() || *rit != jj) return npos;
    const auto& rg = j_ranges[static_cast<std::size_t>(rit - j_of_range.begin())];
    std::size_t lo = rg.first, hi = rg.second;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const int* mc = coords(mid);
        if (std::lexicographical_compare(mc, mc + m, c, c + m))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == rg.second) return npos;
    const int* mc = coords(lo);
    return std::equal(mc, mc + m, c) ? lo : npos;
}

ModeSet build_mode_set(const Lattice& lat, const CrossSection& cs,
                       const Eigen::VectorXd& xi_perp, double lambda_max) {
    QuasiMomentum qm{xi_perp, 0.0};
    validate_quasimomentum(lat, qm);
    if (!(lambda_max > 0)) throw std::invalid_argument("lambda_max must be positive");

    if (lambda_max > cs.complete_cap())
        throw std::invalid_argument(
            "cross-section eigenpair table ends below lambda_max; build it with up_to(lambda_max)");

    ModeSet ms;
    ms.m = lat.dim();
    ms.lambda_max = lambda_max;
    ms.xi_perp = xi_perp;
    const Eigen::VectorXd b1 = lat.b1();
    const Eigen::VectorXd center = M_PI * b1 + xi_perp;

    for (int j = 0; j < cs.count(); ++j) {
        const double mu = cs.mu(j);
        if (mu > lambda_max) break; // modes are mu-sorted
        const double r = std::sqrt(lambda_max - mu);
        const std::size_t begin = ms.count;
        for_each_dual_point(lat.dual(), -center, r,
                            [&](const int* coords, const Eigen::VectorXd& cart) {
                                // cart is n; |n + center|^2 <= r^2 was enforced
                                const int nn1 = coords[0];
                                Eigen::VectorXd v = cart + xi_perp;
                                v -= (2.0 * M_PI * nn1) * b1;
                                ms.j.push_back(j);
                                ms.n1.push_back(nn1);
                                ms.perp2.push_back(v.squaredNorm() + mu);
                                ms.ncoords.insert(ms.ncoords.end(), coords, coords + ms.m);
                                ++ms.count;
                            });
        if (ms.count > begin) {
            ms.j_ranges.emplace_back(begin, ms.count);
            ms.j_of_range.push_back(j);
        }
    }
    return ms;
}

double default_lambda_max(double tau_max, double margin) {
    return 4.0 * tau_max * tau_max + margin;
}

std::complex<double> h_value(const ModeSet& ms, std::size_t idx, double tau) {
    return free_eigenvalue(ms.n1[idx], ms.perp2[idx], tau);
}

double h_value_real(const ModeSet& ms, std::size_t idx, double theta) {
    const double A = 2.0 * M_PI * ms.n1[idx] + theta;
    return A * A + ms.perp2[idx];
}

std::complex<double> free_eigenvalue_cartesian(const Lattice& lat, double mu,
                                               const std::vector<int>& ncoords,
                                               const Eigen::VectorXd& xi_perp, double tau) {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(lat.dim());
    for (int i = 0; i < lat.dim(); ++i)
        n += static_cast<double>(ncoords[i]) * lat.dual().row(i).transpose();
    const Eigen::VectorXd c = n + M_PI * lat.b1() + xi_perp;
    const double re = c.squaredNorm() + mu - tau * tau;
    const double im = 2.0 * tau * (n.dot(lat.b1()) + M_PI);
    return {re, im};
}

double free_resolvent_norm(const ModeSet& ms, double tau) {
    if (ms.count == 0) throw std::invalid_argument("empty mode set");
    double best = 0;
    for (std::size_t i = 0; i < ms.count; ++i) {
        const double a = std::abs(h_value(ms, i, tau));
        if (a == 0.0)
            throw std::domain_error("free operator not invertible: a mode has h = 0");
        best = std::max(best, 1.0 / a);
    }
    return best;
}

PhaseWeights phase_and_weights(const ModeSet& ms, double tau) {
    if (tau == 0)
        throw std::invalid_argument("phase_and_weights requires tau != 0");
    PhaseWeights pw;
    pw.phase.resize(static_cast<Eigen::Index>(ms.count));
    pw.weight.resize(static_cast<Eigen::Index>(ms.count));
    for (std::size_t i = 0; i < ms.count; ++i) {
        const std::complex<double> h = h_value(ms, i, tau);
        const double a = std::abs(h);
        if (a == 0.0) throw std::domain_error("phase_and_weights: a mode has h = 0");
        pw.phase(static_cast<Eigen::Index>(i)) = h / a;
        pw.weight(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(a);
    }
    return pw;
}

} // namespace tlab
