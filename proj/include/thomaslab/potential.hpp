#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thomaslab/cross_section.hpp"
#include "thomaslab/lattice.hpp"

namespace tlab {

// Periodic potential on M x cell as a coefficient tensor in the joint
// eigenbasis: c_{j',j}(nu) = <V phi_{j,n}, phi_{j',n+nu}> for every n.
// x-independent content is held separately in y_entries (one coefficient per
// dual offset, applied to every diagonal pair), so band-limited potentials of
// the form V(y) stay exact for all cross-section indices at once.
class PotentialSpec {
public:
    using Key = std::vector<int>;                    // dual-lattice offset, integer coords
    struct PairKey {
        int jp, j;
        Key nu;
        bool operator<(const PairKey& o) const {
            if (jp != o.jp) return jp < o.jp;
            if (j != o.j) return j < o.j;
            return nu < o.nu;
        }
    };

    static PotentialSpec zero(const Lattice& lat);

    // x-independent finite Fourier series sum_nu g_nu e^{i<nu,y>}; validates
    // the reality symmetry g_{-nu} = conj(g_nu).
    static PotentialSpec from_harmonics(const Lattice& lat,
                                        const std::map<Key, std::complex<double>>& harmonics);

    // Explicit pair entries (j', j, nu) -> c; validates reality symmetry
    // c_{j',j}(nu) = conj(c_{j,j'}(-nu)) within 1e-12 relative.
    static PotentialSpec from_entries(const Lattice& lat, int jcap,
                                      const std::map<PairKey, std::complex<double>>& entries,
                                      const std::map<Key, std::complex<double>>& harmonics = {});

    // Raw grid samples with no projection (norms and splitting only).
    // wx are x-quadrature weights (one per sample row); the y grid is the
    // tensor of `yres` equispaced fractional points per lattice direction.
    static PotentialSpec from_raw_samples(const Lattice& lat, const Eigen::VectorXd& wx,
                                          const std::vector<int>& yres,
                                          const Eigen::MatrixXd& samples);

    int m() const { return m_; }
    double cell_volume() const { return cell_vol_; }
    bool empty() const { return y_entries_.empty() && pair_entries_.empty(); }
    int jcap() const { return jcap_; }

    const std::map<Key, std::complex<double>>& y_entries() const { return y_entries_; }
    const std::map<PairKey, std::complex<double>>& pair_entries() const { return pair_entries_; }

    // c_{j',j}(nu); zero when the offset lies outside the stored support.
    std::complex<double> coupling(int jp, int j, const Key& nu) const;

    // True when no entry couples different cross-section indices.
    bool cross_section_diagonal() const;

    bool has_samples() const { return has_samples_; }
    const Eigen::MatrixXd& samples() const { return samples_; }
    const Eigen::VectorXd& sample_weights_x() const { return wx_; }
    const std::vector<int>& sample_yres() const { return yres_; }
    double sample_cell_weight() const; // cell volume / (# y nodes)

    // Populates samples by evaluating the stored coefficients pointwise.
    // Only valid when the tensor represents a function of y alone (diagonal,
    // j-independent); throws otherwise.
    void synthesize_samples(double vol_M, const std::vector<int>& yres);

    double max_abs_sample() const;

private:
    int m_ = 0;
    Eigen::MatrixXd lat_basis_;
    double cell_vol_ = 0;
    int jcap_ = 0;
    std::map<Key, std::complex<double>> y_entries_;
    std::map<PairKey, std::complex<double>> pair_entries_;
    bool has_samples_ = false;
    Eigen::VectorXd wx_;
    std::vector<int> yres_;
    Eigen::MatrixXd samples_; // rows follow wx_, columns follow the y grid

    friend PotentialSpec project_samples(const Lattice&, const CrossSection&,
                                         const QuadratureGrid&, const std::vector<int>&,
                                         const Eigen::MatrixXd&, int, const std::vector<int>&,
                                         std::vector<std::string>*);
};

// Quadrature projection of grid samples onto the joint eigenbasis. Emits a
// warning diagnostic when more than 1e-6 of the sample energy lies above the
// (jcap, nucap) caps.
PotentialSpec project_samples(const Lattice& lat, const CrossSection& cs,
                              const QuadratureGrid& xgrid, const std::vector<int>& yres,
                              const Eigen::MatrixXd& samples, int jcap,
                              const std::vector<int>& nucap,
                              std::vector<std::string>* warnings = nullptr);

// Quadrature L_p norm over M x cell; requires samples (p = infinity is
// rejected, use max_abs_sample for the sup diagnostic).
double lp_norm(const PotentialSpec& V, double p);

struct SplitResult {
    Eigen::MatrixXd v1, v2;
    double level = 0;        // c(delta): the minimal admissible cut level t
    double achieved_lp = 0;  // ||V1||_p at that level
};

// Level-truncation splitting V = V1 + V2 with V1 = V restricted to |V| > t,
// t found by 60 bisection steps keeping the upper endpoint admissible, so
// ||V1||_p <= delta holds by construction.
SplitResult split_by_level(const PotentialSpec& V, double p, double delta);

std::complex<double> coupling_element(const PotentialSpec& V, int j, const std::vector<int>& n,
                                      int jp, const std::vector<int>& np);

// Robin weight on the two layer faces as finite Fourier series over the dual
// lattice; real-valued (coefficient symmetry validated).
class BoundarySigma {
public:
    using Key = std::vector<int>;

    BoundarySigma(int m, const std::map<Key, std::complex<double>>& face0,
                  const std::map<Key, std::complex<double>>& face_a);

    int m() const { return m_; }
    const std::map<Key, std::complex<double>>& face(bool far_end) const {
        return far_end ? face_a_ : face0_;
    }
    std::complex<double> hat(bool far_end, const Key& nu) const;

    // sigma at the fractional cell coordinate t (real by symmetry).
    double eval(bool far_end, const Eigen::VectorXd& tfrac) const;

    BoundarySigma scaled(double s) const;
    bool zero() const { return face0_.empty() && face_a_.empty(); }

private:
    int m_;
    std::map<Key, std::complex<double>> face0_, face_a_;
};

} // namespace tlab
