#include "thomaslab/potential.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

long grid_size(const std::vector<int>& yres) {
    long n = 1;
    for (int r : yres) {
        if (r < 1) throw std::invalid_argument("y grid resolution must be positive");
        n *= r;
    }
    return n;
}

// Fractional coordinates of y node `t` (lexicographic order, last dimension
// fastest, matching the tensor quadrature grids).
void frac_of_index(const std::vector<int>& yres, long t, Eigen::VectorXd& out) {
    const int m = static_cast<int>(yres.size());
    out.resize(m);
    for (int d = m - 1; d >= 0; --d) {
        out[d] = static_cast<double>(t % yres[d]) / yres[d];
        t /= yres[d];
    }
}

double dot_nu_frac(const std::vector<int>& nu, const Eigen::VectorXd& tfrac) {
    double s = 0;
    for (size_t d = 0; d < nu.size(); ++d) s += nu[d] * tfrac[static_cast<int>(d)];
    return s;
}

std::vector<int> negate(const std::vector<int>& nu) {
    std::vector<int> r(nu.size());
    for (size_t d = 0; d < nu.size(); ++d) r[d] = -nu[d];
    return r;
}

void check_reality_map(const std::map<std::vector<int>, std::complex<double>>& entries,
                       const char* what) {
    double scale = 0;
    for (const auto& [nu, c] : entries) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * std::max(scale, 1.0);
    for (const auto& [nu, c] : entries) {
        auto it = entries.find(negate(nu));
        const std::complex<double> mirror = (it == entries.end()) ? 0.0 : it->second;
        if (std::abs(c - std::conj(mirror)) > tol) {
            std::ostringstream os;
            os << what << ": coefficient at -nu must be the conjugate (reality symmetry)";
            throw std::invalid_argument(os.str());
        }
    }
}

} // namespace

PotentialSpec PotentialSpec::zero(const Lattice& lat) {
    PotentialSpec v;
    v.m_ = lat.dim();
    v.lat_basis_ = lat.basis();
    v.cell_vol_ = lat.cell_volume();
    return v;
}

PotentialSpec PotentialSpec::from_harmonics(
    const Lattice& lat, const std::map<Key, std::complex<double>>& harmonics) {
    PotentialSpec v = zero(lat);
    for (const auto& [nu, c] : harmonics) {
        if (static_cast<int>(nu.size()) != v.m_)
            throw std::invalid_argument("harmonic offset dimension does not match the lattice");
        if (std::abs(c) > 0) v.y_entries_[nu] = c;
    }
    check_reality_map(v.y_entries_, "potential harmonics");
    return v;
}

PotentialSpec PotentialSpec::from_entries(const Lattice& lat, int jcap,
                                          const std::map<PairKey, std::complex<double>>& entries,
                                          const std::map<Key, std::complex<double>>& harmonics) {
    PotentialSpec v = from_harmonics(lat, harmonics);
    if (jcap < 0) throw std::invalid_argument("jcap must be non-negative");
    v.jcap_ = jcap;
    double scale = 0;
    for (const auto& [key, c] : entries) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * std::max(scale, 1.0);
    for (const auto& [key, c] : entries) {
        if (static_cast<int>(key.nu.size()) != v.m_)
            throw std::invalid_argument("pair entry offset dimension does not match the lattice");
        if (key.j < 0 || key.jp < 0 || key.j >= jcap || key.jp >= jcap)
            throw std::invalid_argument("pair entry index outside [0, jcap)");
        if (std::abs(c) > 0) v.pair_entries_[key] = c;
    }
    for (const auto& [key, c] : v.pair_entries_) {
        PairKey mirror{key.j, key.jp, negate(key.nu)};
        auto it = v.pair_entries_.find(mirror);
        const std::complex<double> other = (it == v.pair_entries_.end()) ? 0.0 : it->second;
        if (std::abs(c - std::conj(other)) > tol)
            throw std::invalid_argument(
                "pair entries violate the reality symmetry c_{j',j}(nu) = conj(c_{j,j'}(-nu))");
    }
    return v;
}

PotentialSpec PotentialSpec::from_raw_samples(const Lattice& lat, const Eigen::VectorXd& wx,
                                              const std::vector<int>& yres,
                                              const Eigen::MatrixXd& samples) {
    PotentialSpec v = zero(lat);
    if (static_cast<int>(yres.size()) != v.m_)
        throw std::invalid_argument("y resolution dimension does not match the lattice");
    const long ny = grid_size(yres);
    if (samples.rows() != wx.size() || samples.cols() != ny)
        throw std::invalid_argument("sample matrix shape does not match the grids");
    if (wx.size() < 1) throw std::invalid_argument("at least one x sample row is required");
    v.has_samples_ = true;
    v.wx_ = wx;
    v.yres_ = yres;
    v.samples_ = samples;
    return v;
}

std::complex<double> PotentialSpec::coupling(int jp, int j, const Key& nu) const {
    std::complex<double> c = 0;
    if (jp == j) {
        auto it = y_entries_.find(nu);
        if (it != y_entries_.end()) c += it->second;
    }
    auto it = pair_entries_.find(PairKey{jp, j, nu});
    if (it != pair_entries_.end()) c += it->second;
    return c;
}

bool PotentialSpec::cross_section_diagonal() const {
    for (const auto& [key, c] : pair_entries_)
        if (key.jp != key.j) return false;
    return true;
}

double PotentialSpec::sample_cell_weight() const {
    if (!has_samples_) throw std::logic_error("no grid samples stored");
    return cell_vol_ / static_cast<double>(samples_.cols());
}

void PotentialSpec::synthesize_samples(double vol_M, const std::vector<int>& yres) {
    if (!pair_entries_.empty())
        throw std::logic_error(
            "samples can only be synthesized for potentials that depend on y alone");
    if (vol_M <= 0) throw std::invalid_argument("cross-section volume must be positive");
    if (static_cast<int>(yres.size()) != m_)
        throw std::invalid_argument("y resolution dimension does not match the lattice");
    const long ny = grid_size(yres);
    samples_.resize(1, ny);
    Eigen::VectorXd tfrac;
    for (long t = 0; t < ny; ++t) {
        frac_of_index(yres, t, tfrac);
        std::complex<double> val = 0;
        for (const auto& [nu, c] : y_entries_)
            val += c * std::polar(1.0, kTwoPi * dot_nu_frac(nu, tfrac));
        samples_(0, t) = val.real();
    }
    wx_.resize(1);
    wx_[0] = vol_M;
    yres_ = yres;
    has_samples_ = true;
}

double PotentialSpec::max_abs_sample() const {
    if (!has_samples_) throw std::logic_error("no grid samples stored");
    return samples_.cwiseAbs().maxCoeff();
}

PotentialSpec project_samples(const Lattice& lat, const CrossSection& cs,
                              const QuadratureGrid& xgrid, const std::vector<int>& yres,
                              const Eigen::MatrixXd& samples, int jcap,
                              const std::vector<int>& nucap,
                              std::vector<std::string>* warnings) {
    PotentialSpec v = PotentialSpec::from_raw_samples(lat, xgrid.weights, yres, samples);
    if (jcap < 1 || jcap > cs.count())
        throw std::invalid_argument("jcap must lie in [1, number of tabulated eigenpairs]");
    if (static_cast<int>(nucap.size()) != lat.dim())
        throw std::invalid_argument("nucap dimension does not match the lattice");
    for (int c : nucap)
        if (c < 0) throw std::invalid_argument("nucap entries must be non-negative");
    v.jcap_ = jcap;

    const long nx = samples.rows();
    const long ny = samples.cols();
    const Eigen::MatrixXcd tab = eigenfunction_table(cs, xgrid).leftCols(jcap);

    // Pairwise quadrature P_{j',j}(t) = sum_i w_i V(x_i, y_t) phi_j conj(phi_j').
    std::vector<Eigen::MatrixXcd> pairs(ny);
    Eigen::MatrixXcd weighted(nx, jcap);
    for (long t = 0; t < ny; ++t) {
        for (long i = 0; i < nx; ++i)
            weighted.row(i) = xgrid.weights[i] * samples(i, t) * tab.row(i);
        pairs[t] = tab.adjoint() * weighted;
    }

    // Discrete Fourier transform in y over the kept offsets.
    std::vector<Eigen::VectorXd> fracs(ny);
    for (long t = 0; t < ny; ++t) frac_of_index(yres, t, fracs[t]);

    const double drop_tol = 1e-12 * std::max(1e-300, samples.cwiseAbs().maxCoeff());
    std::vector<int> nu(lat.dim());
    std::map<PotentialSpec::PairKey, std::complex<double>> raw;

    std::function<void(int)> loop = [&](int d) {
        if (d == lat.dim()) {
            Eigen::MatrixXcd chat = Eigen::MatrixXcd::Zero(jcap, jcap);
            for (long t = 0; t < ny; ++t)
                chat += pairs[t] * std::polar(1.0, -kTwoPi * dot_nu_frac(nu, fracs[t]));
            chat /= static_cast<double>(ny);
            for (int jp = 0; jp < jcap; ++jp)
                for (int j = 0; j < jcap; ++j)
                    if (std::abs(chat(jp, j)) > drop_tol)
                        raw[PotentialSpec::PairKey{jp, j, nu}] = chat(jp, j);
            return;
        }
        for (nu[d] = -nucap[d]; nu[d] <= nucap[d]; ++nu[d]) loop(d + 1);
    };
    loop(0);

    // Enforce the reality symmetry by averaging with the conjugate mirror.
    for (auto& [key, c] : raw) {
        PotentialSpec::PairKey mirror{key.j, key.jp, negate(key.nu)};
        auto it = raw.find(mirror);
        const std::complex<double> other = (it == raw.end()) ? 0.0 : it->second;
        c = 0.5 * (c + std::conj(other));
    }

    // A tensor that is diagonal and index-independent across the full cap is a
    // function of y alone; hoist it so the coefficients apply to every index.
    bool yonly = true;
    std::map<std::vector<int>, std::complex<double>> diag_by_nu;
    std::map<std::vector<int>, int> diag_count;
    double scale = 0;
    for (const auto& [key, c] : raw) scale = std::max(scale, std::abs(c));
    for (const auto& [key, c] : raw) {
        if (key.jp != key.j) {
            yonly = false;
            break;
        }
        auto [it, fresh] = diag_by_nu.try_emplace(key.nu, c);
        ++diag_count[key.nu];
        if (!fresh && std::abs(it->second - c) > 1e-9 * std::max(scale, 1.0)) {
            yonly = false;
            break;
        }
    }
    if (yonly)
        for (const auto& [nu0, cnt] : diag_count)
            if (cnt != jcap) yonly = false;

    if (yonly && !raw.empty()) {
        for (const auto& [nu0, c] : diag_by_nu) {
            std::complex<double> mean = 0;
            for (int j = 0; j < jcap; ++j) mean += raw[PotentialSpec::PairKey{j, j, nu0}];
            v.y_entries_[nu0] = mean / static_cast<double>(jcap);
        }
    } else {
        v.pair_entries_ = std::move(raw);
    }

    // Aliasing diagnostic: compare the sample mass against the Parseval mass
    // of the scalar expansion onto phi_j(x) e^{i<nu,y>} within the caps.
    if (warnings) {
        const double ycw = lat.cell_volume() / static_cast<double>(ny);
        double total = 0;
        for (long i = 0; i < nx; ++i)
            for (long t = 0; t < ny; ++t)
                total += xgrid.weights[i] * ycw * samples(i, t) * samples(i, t);
        Eigen::MatrixXcd g(jcap, ny); // g_j(t) = int_M V conj(phi_j)
        for (long t = 0; t < ny; ++t)
            for (int j = 0; j < jcap; ++j) {
                std::complex<double> s = 0;
                for (long i = 0; i < nx; ++i)
                    s += xgrid.weights[i] * samples(i, t) * std::conj(tab(i, j));
                g(j, t) = s;
            }
        double kept = 0;
        std::function<void(int)> eloop = [&](int d) {
            if (d == lat.dim()) {
                for (int j = 0; j < jcap; ++j) {
                    std::complex<double> a = 0;
                    for (long t = 0; t < ny; ++t)
                        a += g(j, t) * std::polar(1.0, -kTwoPi * dot_nu_frac(nu, fracs[t]));
                    a /= static_cast<double>(ny);
                    kept += std::norm(a) * lat.cell_volume();
                }
                return;
            }
            for (nu[d] = -nucap[d]; nu[d] <= nucap[d]; ++nu[d]) eloop(d + 1);
        };
        eloop(0);
        const double excess = total - kept;
        if (total > 0 && excess > 1e-6 * total) {
            std::ostringstream os;
            os.precision(3);
            os << "potential sampling: " << std::scientific << excess / total
               << " of the squared mass lies above the coefficient caps; raise jcap/nucap or "
                  "refine the sample grids";
            warnings->push_back(os.str());
        }
    }
    return v;
}

namespace {

double weighted_lp(const PotentialSpec& V, const Eigen::MatrixXd& vals, double p) {
    const double ycw = V.sample_cell_weight();
    const Eigen::VectorXd& wx = V.sample_weights_x();
    double acc = 0;
    for (long i = 0; i < vals.rows(); ++i)
        for (long t = 0; t < vals.cols(); ++t)
            acc += wx[i] * ycw * std::pow(std::abs(vals(i, t)), p);
    return std::pow(acc, 1.0 / p);
}

} // namespace

double lp_norm(const PotentialSpec& V, double p) {
    if (std::isinf(p))
        throw std::invalid_argument("p = infinity is not supported here; use max_abs_sample");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
    if (!V.has_samples()) throw std::logic_error("lp_norm requires grid samples");
    return weighted_lp(V, V.samples(), p);
}

SplitResult split_by_level(const PotentialSpec& V, double p, double delta) {
    if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("split requires finite p >= 1");
    if (!(delta >= 0)) throw std::invalid_argument("delta must be non-negative");
    if (!V.has_samples()) throw std::logic_error("split requires grid samples");
    const Eigen::MatrixXd& s = V.samples();

    auto cut = [&](double t) -> Eigen::MatrixXd { // V restricted to |V| > t
        return (s.cwiseAbs().array() > t).select(s, Eigen::MatrixXd::Zero(s.rows(), s.cols()));
    };
    auto norm_above = [&](double t) { return weighted_lp(V, cut(t), p); };

    double lo = 0, hi = V.max_abs_sample();
    if (norm_above(0) <= delta) {
        hi = 0;
    } else {
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (norm_above(mid) <= delta)
                hi = mid;
            else
                lo = mid;
        }
    }
    SplitResult r;
    r.level = hi;
    r.v1 = cut(hi);
    r.v2 = s - r.v1;
    r.achieved_lp = weighted_lp(V, r.v1, p);
    return r;
}

std::complex<double> coupling_element(const PotentialSpec& V, int j, const std::vector<int>& n,
                                      int jp, const std::vector<int>& np) {
    if (n.size() != np.size() || static_cast<int>(n.size()) != V.m())
        throw std::invalid_argument("offset coordinates must have the lattice dimension");
    std::vector<int> nu(n.size());
    for (size_t d = 0; d < n.size(); ++d) nu[d] = np[d] - n[d];
    return V.coupling(jp, j, nu);
}

BoundarySigma::BoundarySigma(int m, const std::map<Key, std::complex<double>>& face0,
                             const std::map<Key, std::complex<double>>& face_a)
    : m_(m) {
    if (m < 1) throw std::invalid_argument("boundary weight needs at least one periodic direction");
    auto take = [&](const std::map<Key, std::complex<double>>& in, const char* what) {
        std::map<Key, std::complex<double>> out;
        for (const auto& [nu, c] : in) {
            if (static_cast<int>(nu.size()) != m)
                throw std::invalid_argument("boundary weight offset dimension mismatch");
            if (std::abs(c) > 0) out[nu] = c;
        }
        check_reality_map(out, what);
        return out;
    };
    face0_ = take(face0, "boundary weight (near face)");
    face_a_ = take(face_a, "boundary weight (far face)");
}

std::complex<double> BoundarySigma::hat(bool far_end, const Key& nu) const {
    const auto& f = face(far_end);
    auto it = f.find(nu);
    return it == f.end() ? std::complex<double>(0) : it->second;
}

double BoundarySigma::eval(bool far_end, const Eigen::VectorXd& tfrac) const {
    std::complex<double> val = 0;
    for (const auto& [nu, c] : face(far_end))
        val += c * std::polar(1.0, kTwoPi * dot_nu_frac(nu, tfrac));
    return val.real();
}

BoundarySigma BoundarySigma::scaled(double s) const {
    BoundarySigma r = *this;
    for (auto& [nu, c] : r.face0_) c *= s;
    for (auto& [nu, c] : r.face_a_) c *= s;
    return r;
}

} // namespace tlab
