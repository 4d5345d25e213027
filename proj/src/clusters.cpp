#include "thomaslab/clusters.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "thomaslab/csv.hpp"
#include "thomaslab/rng.hpp"

namespace tlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Cluster index of a value in [(k-1)^2, k^2): exact at the square boundaries,
// where the value belongs to the upper cluster.
int cluster_of(double v) {
    const int k = static_cast<int>(std::floor(std::sqrt(std::max(v, 0.0)))) + 1;
    return k;
}

int next_fast_size(int n) {
    for (int v = n;; ++v) {
        int r = v;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return v;
    }
}

} // namespace

std::size_t ClusterContext::total() const {
    return fiber ? fiber->count : static_cast<std::size_t>(cs->count());
}

double ClusterContext::value(std::size_t idx) const {
    return fiber ? fiber->base(idx) : cs->mu(static_cast<int>(idx));
}

int ClusterContext::j_of(std::size_t idx) const {
    return fiber ? fiber->j[idx] : static_cast<int>(idx);
}

ClusterContext manifold_context(std::shared_ptr<const CrossSection> cs) {
    if (!cs) throw std::invalid_argument("null cross-section");
    ClusterContext ctx;
    ctx.value_cap = cs->complete_cap();
    ctx.cs = std::move(cs);
    return ctx;
}

ClusterContext fiber_context(std::shared_ptr<const CrossSection> cs,
                             std::shared_ptr<const ModeSet> fiber, double cell_volume) {
    if (!cs || !fiber) throw std::invalid_argument("null context component");
    if (cell_volume <= 0) throw std::invalid_argument("cell volume must be positive");
    ClusterContext ctx;
    ctx.value_cap = fiber->lambda_max;
    ctx.cs = std::move(cs);
    ctx.fiber = std::move(fiber);
    ctx.cell_volume = cell_volume;
    return ctx;
}

std::vector<std::size_t> cluster_members(const ClusterContext& ctx, int k) {
    if (k < 1) throw std::invalid_argument("cluster index k must be positive");
    const double k2 = static_cast<double>(k) * k;
    if (k2 > ctx.value_cap * (1 + 1e-12))
        throw std::invalid_argument("cluster " + std::to_string(k) +
                                    " needs the spectrum tabulated to at least " + num(k2) +
                                    "; the context covers " + num(ctx.value_cap));
    const double lo = static_cast<double>(k - 1) * (k - 1);
    std::vector<std::size_t> members;
    const std::size_t n = ctx.total();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = ctx.value(i);
        if (v >= lo && v < k2) members.push_back(i);
    }
    return members;
}

namespace {

// sup over the cross-section of sum |phi_j|^2 over the given modes. The
// torus and circle factors have constant modulus, so only an interval factor
// needs a grid; with none present a single point is exact.
double sup_sum_sq(const ClusterContext& ctx, const std::vector<std::size_t>& members,
                  int sup_res) {
    const CrossSection& cs = *ctx.cs;
    const auto kind = cs.spec().kind;
    const bool needs_grid = kind == CrossSectionSpec::Kind::Interval ||
                            kind == CrossSectionSpec::Kind::IntervalTimesTorus;
    const int steps = needs_grid ? std::max(sup_res, 16) : 0;
    const double a = cs.spec().length;

    // The periodic factors all have constant modulus, so the sum only
    // depends on the interval label; one representative per label carries
    // the multiplicity of its group.
    std::map<int, std::pair<std::size_t, double>> by_label;
    for (std::size_t idx : members) {
        const int lab = needs_grid ? cs.mode(ctx.j_of(idx)).label : 0;
        auto [it, fresh] = by_label.try_emplace(lab, std::make_pair(idx, 0.0));
        (void)fresh;
        it->second.second += 1.0;
    }

    double best = 0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cs.dim());
    for (int i = 0; i <= steps; ++i) {
        if (needs_grid) x[0] = a * i / std::max(steps, 1);
        double s = 0;
        for (const auto& [lab, rep] : by_label)
            s += rep.second * std::norm(cs.eval(ctx.j_of(rep.first), x));
        best = std::max(best, s);
    }
    return best / (ctx.fiber ? ctx.cell_volume : 1.0);
}

struct DualityResult {
    double lower = 0;
};

// Lower bound on ||E_k||_{2->q} for a flat-torus spectrum: duality ascent in
// coefficient space with FFT evaluation, then an exact trapezoid norm of the
// best iterate on a grid fine enough for |F|^q (q even) to be band-limited.
DualityResult torus_duality_lower(const ClusterContext& ctx,
                                  const std::vector<std::size_t>& members, double q,
                                  const NormOptions& opts, int k) {
    const CrossSection& cs = *ctx.cs;
    const int m = static_cast<int>(cs.spec().torus_basis.rows());
    const long R = static_cast<long>(members.size());
    const double vol = cs.volume();

    int kappa_max = 0;
    for (std::size_t idx : members)
        for (int c : cs.mode(static_cast<int>(idx)).torus_coords)
            kappa_max = std::max(kappa_max, std::abs(c));

    const int n1 = next_fast_size(2 * kappa_max + 2);
    const bool even_q = std::abs(q - std::round(q)) < 1e-12 &&
                        static_cast<long>(std::round(q)) % 2 == 0;
    int n2 = next_fast_size(static_cast<int>(std::ceil(q * kappa_max)) + 2);
    double fine_pts = std::pow(static_cast<double>(n2), m);
    if (!even_q || fine_pts > 4e7) n2 = n1; // fall back to the ascent grid

    auto flat_index = [&](const std::vector<int>& kappa, int n) {
        long idx = 0;
        for (int d = 0; d < m; ++d) idx = idx * n + ((kappa[d] % n) + n) % n;
        return idx;
    };
    std::vector<long> idx1(R), idx2(R);
    for (long r = 0; r < R; ++r) {
        const auto& kc = cs.mode(static_cast<int>(members[static_cast<std::size_t>(r)])).torus_coords;
        idx1[r] = flat_index(kc, n1);
        idx2[r] = flat_index(kc, n2);
    }

    auto alloc = [](long count) {
        return static_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * count));
    };
    long total1 = 1, total2 = 1;
    for (int d = 0; d < m; ++d) total1 *= n1, total2 *= n2;
    std::complex<double>* buf_in = alloc(std::max(total1, total2));
    std::complex<double>* buf_out = alloc(std::max(total1, total2));
    std::vector<int> dims1(m, n1), dims2(m, n2);
    fftw_plan back1 = fftw_plan_dft(m, dims1.data(), reinterpret_cast<fftw_complex*>(buf_in),
                                    reinterpret_cast<fftw_complex*>(buf_out), FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
    fftw_plan fwd1 = fftw_plan_dft(m, dims1.data(), reinterpret_cast<fftw_complex*>(buf_in),
                                   reinterpret_cast<fftw_complex*>(buf_out), FFTW_FORWARD,
                                   FFTW_ESTIMATE);
    fftw_plan back2 = n2 == n1 ? back1
                               : fftw_plan_dft(m, dims2.data(),
                                               reinterpret_cast<fftw_complex*>(buf_in),
                                               reinterpret_cast<fftw_complex*>(buf_out),
                                               FFTW_BACKWARD, FFTW_ESTIMATE);

    const double sqv = std::sqrt(vol);
    auto eval_norm = [&](const Eigen::VectorXcd& a, const std::vector<long>& idx, long total,
                         fftw_plan plan) {
        std::fill(buf_in, buf_in + total, std::complex<double>(0));
        for (long r = 0; r < R; ++r) buf_in[idx[r]] = a[r] / sqv;
        fftw_execute(plan);
        const double w = vol / static_cast<double>(total);
        double acc = 0;
        for (long t = 0; t < total; ++t) acc += w * std::pow(std::abs(buf_out[t]), q);
        return std::pow(acc, 1.0 / q);
    };

    double best_final = 0;
    Eigen::VectorXcd a(R);
    for (int s = 0; s < opts.starts; ++s) {
        CounterRng rng(opts.seed, (static_cast<std::uint64_t>(k) << 16) + s);
        for (long r = 0; r < R; ++r) a[r] = {rng.normal(2 * r), rng.normal(2 * r + 1)};
        a.normalize();
        double prev = 0;
        for (int it = 0; it < opts.max_iter; ++it) {
            std::fill(buf_in, buf_in + total1, std::complex<double>(0));
            for (long r = 0; r < R; ++r) buf_in[idx1[r]] = a[r] / sqv;
            fftw_execute(back1);
            const double w = vol / static_cast<double>(total1);
            double acc = 0;
            for (long t = 0; t < total1; ++t) {
                const double av = std::abs(buf_out[t]);
                acc += w * std::pow(av, q);
                buf_in[t] = std::pow(av, q - 2.0) * buf_out[t];
            }
            const double val = std::pow(acc, 1.0 / q);
            fftw_execute(fwd1);
            for (long r = 0; r < R; ++r) a[r] = buf_out[idx1[r]];
            const double na = a.norm();
            if (na == 0) break;
            a /= na;
            if (it > 0 && std::abs(val - prev) <= opts.tol * val) break;
            prev = val;
        }
        const double final_val = eval_norm(a, idx2, total2, back2);
        best_final = std::max(best_final, final_val);
    }

    if (back2 != back1) fftw_destroy_plan(back2);
    fftw_destroy_plan(fwd1);
    fftw_destroy_plan(back1);
    fftw_free(buf_in);
    fftw_free(buf_out);
    return {best_final};
}

// Generic duality ascent on a quadrature grid, for cross-sections with an
// interval factor. The reported value is the quadrature Lq norm of the final
// iterate, i.e. a norm estimate on the stated grid.
DualityResult dense_duality_lower(const ClusterContext& ctx,
                                  const std::vector<std::size_t>& members, double q,
                                  const NormOptions& opts, int k) {
    const CrossSection& cs = *ctx.cs;
    const int res = std::max(24, 4 * k + 8);
    const double grid_count = std::pow(static_cast<double>(res), cs.dim());
    if (grid_count * static_cast<double>(members.size()) > 5e7)
        throw std::length_error("duality grid would need " + num(grid_count) +
                                " nodes; reduce k or use q in {2, infinity}");
    const QuadratureGrid grid = quadrature_grid(cs.spec(), res);
    const long nodes = grid.nodes.rows();
    const long R = static_cast<long>(members.size());
    Eigen::MatrixXcd phi(nodes, R);
    for (long r = 0; r < R; ++r)
        for (long i = 0; i < nodes; ++i)
            phi(i, r) = cs.eval(ctx.j_of(members[static_cast<std::size_t>(r)]),
                                grid.nodes.row(i).transpose());

    double best = 0;
    Eigen::VectorXcd a(R);
    for (int s = 0; s < opts.starts; ++s) {
        CounterRng rng(opts.seed, (static_cast<std::uint64_t>(k) << 16) + s);
        for (long r = 0; r < R; ++r) a[r] = {rng.normal(2 * r), rng.normal(2 * r + 1)};
        a.normalize();
        double prev = 0, val = 0;
        for (int it = 0; it < opts.max_iter; ++it) {
            Eigen::VectorXcd f = phi * a;
            val = lq_norm(grid, f, q);
            Eigen::VectorXcd g(nodes);
            for (long i = 0; i < nodes; ++i)
                g[i] = grid.weights[i] * std::pow(std::abs(f[i]), q - 2.0) * f[i];
            a = phi.adjoint() * g;
            const double na = a.norm();
            if (na == 0) break;
            a /= na;
            if (it > 0 && std::abs(val - prev) <= opts.tol * val) break;
            prev = val;
        }
        best = std::max(best, val);
    }
    return {best};
}

} // namespace

ClusterNormEntry cluster_norm(const ClusterContext& ctx, int k, double q,
                              const NormOptions& opts) {
    if (!(q >= 2.0)) throw std::invalid_argument("cluster norms need q >= 2");
    const auto members = cluster_members(ctx, k);
    ClusterNormEntry e;
    e.k = k;
    e.q = q;
    e.rank = static_cast<long>(members.size());
    if (members.empty()) {
        e.exact = true;
        return e;
    }
    if (q == 2.0) {
        e.lower = e.upper = 1.0;
        e.exact = true;
        return e;
    }
    const double sup = std::sqrt(sup_sum_sq(ctx, members, opts.sup_res));
    if (std::isinf(q)) {
        e.lower = e.upper = sup;
        e.exact = true;
        return e;
    }
    if (ctx.fiber)
        throw std::invalid_argument(
            "intermediate q on a fiber spectrum is not supported; use q = 2 or q = infinity");
    const auto kind = ctx.cs->spec().kind;
    const DualityResult lower = kind == CrossSectionSpec::Kind::FlatTorus
                                    ? torus_duality_lower(ctx, members, q, opts, k)
                                    : dense_duality_lower(ctx, members, q, opts, k);
    e.lower = lower.lower;
    e.upper = std::pow(sup, 1.0 - 2.0 / q); // interpolation against ||E_k||_{2->2} = 1
    e.exact = false;
    return e;
}

double reference_exponent(int d, double q, Regime regime) {
    if (d < 2) throw std::invalid_argument("the cluster estimates need dimension d >= 2");
    if (!(q >= 2.0)) throw std::invalid_argument("cluster norms need q >= 2");
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    switch (regime) {
    case Regime::NoBoundary:
    case Regime::ProductInterval: {
        const double qlo = 2.0 * (d + 1) / (d - 1);
        if (q < qlo - 1e-12)
            throw std::invalid_argument("q = " + num(q) + " outside the validity window [" +
                                        num(qlo) + ", infinity] = [2(d+1)/(d-1), infinity]");
        return d * (0.5 - iq) - 0.5;
    }
    case Regime::BoundaryHighQ: {
        if (d < 3) throw std::invalid_argument("the boundary estimate needs d >= 3");
        const double qlo = d == 3 ? 5.0 : 4.0;
        if (q < qlo - 1e-12)
            throw std::invalid_argument(
                "q = " + num(q) + " outside the validity window [" + num(qlo) +
                ", infinity] (5 <= q <= infinity for d = 3, 4 <= q <= infinity for d >= 4)");
        return d * (0.5 - iq) - 0.5;
    }
    case Regime::BoundaryLowQ: {
        if (d < 4)
            throw std::invalid_argument("the low-q boundary window 2 <= q <= 4 needs d >= 4");
        if (q > 4.0 + 1e-12)
            throw std::invalid_argument("q = " + num(q) +
                                        " outside the validity window 2 <= q <= 4");
        return d * (0.5 - iq) + 2.0 * iq - 1.0;
    }
    }
    throw std::logic_error("unknown regime");
}

ExponentFit fit_cluster_exponent(const std::vector<double>& ks, const std::vector<double>& norms,
                                 double q) {
    if (ks.size() != norms.size()) throw std::invalid_argument("k and norm series differ in size");
    std::vector<double> kk, nn;
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (norms[i] > 0 && std::isfinite(norms[i]) && ks[i] > 0) {
            kk.push_back(ks[i]);
            nn.push_back(norms[i]);
        }
    if (kk.size() < 10)
        throw std::invalid_argument("exponent fit needs at least 10 clusters with nonzero norm");
    if (*std::max_element(kk.begin(), kk.end()) == *std::min_element(kk.begin(), kk.end()))
        throw std::invalid_argument("exponent fit needs distinct cluster indices");
    const LineFit f = fit_loglog(kk, nn);
    ExponentFit out;
    out.q = q;
    out.k_min = static_cast<int>(std::lround(*std::min_element(kk.begin(), kk.end())));
    out.k_max = static_cast<int>(std::lround(*std::max_element(kk.begin(), kk.end())));
    out.slope = f.slope;
    out.epsilon = 0.5 - f.slope;
    out.rms_residual = f.rms_residual;
    out.count = static_cast<int>(kk.size());
    return out;
}

namespace {

// Exact integral \int_M^\infty x^alpha / (x^2 - c) dx via the geometric
// expansion of the denominator; needs c < M^2 (here M >= 2|tau| always).
double tail_integral(double alpha, double c, double M) {
    double sum = 0, ci = 1.0, mp = std::pow(M, alpha - 1.0);
    for (int i = 0; i < 400; ++i) {
        const double term = ci * mp / (2.0 * i + 1.0 - alpha);
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        ci *= c;
        mp /= M * M;
    }
    return sum;
}

// Euler-Maclaurin completion of sum_{k >= M} k^alpha / (k^2 - c).
double s1_tail(double alpha, double c, double M) {
    const double f = std::pow(M, alpha) / (M * M - c);
    const double fp = alpha * std::pow(M, alpha - 1.0) / (M * M - c) -
                      2.0 * std::pow(M, alpha + 1.0) / ((M * M - c) * (M * M - c));
    return tail_integral(alpha, c, M) + 0.5 * f - fp / 12.0;
}

// Same for sum_{l >= M} (l+1)^alpha / (l^2 - c), expanding (l+1)^alpha
// binomially inside the integral.
double s2_tail(double alpha, double c, double M) {
    double integral = 0, coef = 1.0;
    for (int jj = 0; jj <= 80; ++jj) {
        const double term = coef * tail_integral(alpha - jj, c, M);
        integral += term;
        if (std::abs(term) <= 1e-18 * std::abs(integral)) break;
        coef *= (alpha - jj) / (jj + 1.0);
    }
    const double den = M * M - c;
    const double g = std::pow(M + 1.0, alpha) / den;
    const double gp = alpha * std::pow(M + 1.0, alpha - 1.0) / den -
                      std::pow(M + 1.0, alpha) * 2.0 * M / (den * den);
    return integral + 0.5 * g - gp / 12.0;
}

void check_lemma_args(double eps, double tau) {
    if (!(eps > 0.0) || !(eps < 0.5))
        throw std::invalid_argument("epsilon must lie in the open interval (0, 1/2)");
    if (!(std::abs(tau) > 1.0)) throw std::invalid_argument("|tau| must exceed 1");
}

} // namespace

LemmaSums lemma_sums(double eps, double tau) {
    check_lemma_args(eps, tau);
    const double ta = std::abs(tau);
    const double t2 = ta * ta;
    const double alpha = 1.0 - 2.0 * eps;
    const double c = t2 - ta;
    const long K = std::max<long>(2 * static_cast<long>(std::ceil(ta)), 2000);

    LemmaSums out;
    for (long k = 1; k <= K; ++k) {
        const double kp = std::pow(static_cast<double>(k), alpha);
        out.s1 += kp / (std::abs(static_cast<double>(k) * k - t2) + ta);
        const double l = static_cast<double>(k - 1);
        out.s2 += kp / (std::abs(l * l - t2) + ta);
    }
    // Beyond K >= 2|tau| the absolute values are plain, so the remainder has
    // the closed tail form; its own error is a high Euler-Maclaurin term,
    // orders below 1e-10.
    out.s1 += s1_tail(alpha, c, static_cast<double>(K + 1));
    out.s2 += s2_tail(alpha, c, static_cast<double>(K)); // l = k - 1 >= K
    return out;
}

ClusterExtremes build_cluster_extremes(const Lattice& lat, const CrossSection& cs,
                                       const Eigen::VectorXd& xi_perp, int k_max) {
    if (k_max < 1) throw std::invalid_argument("k_max must be positive");
    const double cap = static_cast<double>(k_max) * k_max;
    if (cap > cs.complete_cap() * (1 + 1e-12))
        throw std::invalid_argument("cluster extremes up to k = " + std::to_string(k_max) +
                                    " need eigenvalues to " + num(cap) +
                                    "; the cross-section table covers " +
                                    num(cs.complete_cap()));
    ClusterExtremes ext;
    ext.k_max = k_max;
    ext.m = lat.dim();
    ext.count.assign(static_cast<std::size_t>(k_max) + 1, 0);
    ext.lo.assign(static_cast<std::size_t>(k_max) + 1, kInf);
    ext.hi.assign(static_cast<std::size_t>(k_max) + 1, -kInf);
    ext.dual_rows = lat.dual();
    ext.center = M_PI * lat.b1() + xi_perp;

    for (int j = 0; j < cs.count(); ++j) {
        const double mu = cs.mu(j);
        if (mu > cap) break;
        ext.mus.push_back(mu);
    }

    auto record = [&](double v) {
        if (v >= cap) return;
        const int k = cluster_of(v);
        if (k > k_max) return;
        auto ku = static_cast<std::size_t>(k);
        ++ext.count[ku];
        ext.lo[ku] = std::min(ext.lo[ku], v);
        ext.hi[ku] = std::max(ext.hi[ku], v);
    };

    if (ext.m == 1) {
        // The value set {(d n + c0)^2} is invariant under d -> -d, so the
        // absolute spacing suffices.
        const double d = std::abs(ext.dual_rows(0, 0));
        const double c0 = ext.center[0];
        for (double mu : ext.mus) {
            const double r = std::sqrt(cap - mu);
            const long nlo = static_cast<long>(std::ceil((-r - c0) / d)) - 1;
            const long nhi = static_cast<long>(std::floor((r - c0) / d)) + 1;
            for (long n = nlo; n <= nhi; ++n) {
                const double A = d * static_cast<double>(n) + c0;
                record(A * A + mu);
            }
        }
    } else {
        for (double mu : ext.mus) {
            const double r = std::sqrt(cap - mu);
            for_each_dual_point(ext.dual_rows, -ext.center, r,
                                [&](const int*, const Eigen::VectorXd& cart) {
                                    record((cart + ext.center).squaredNorm() + mu);
                                });
        }
    }
    return ext;
}

namespace {

// Exact distance from tau^2 to the nearest fiber value inside the straddling
// cluster [lo_k, hi_k); infinity when the cluster is empty there.
double straddle_distance(const ClusterExtremes& ext, double lo, double hi, double t2) {
    double best = kInf;
    if (ext.m == 1) {
        const double d = std::abs(ext.dual_rows(0, 0));
        const double c0 = ext.center[0];
        for (double mu : ext.mus) {
            if (mu >= hi) break;
            const double hb = std::sqrt(hi - mu);
            const double lb = std::sqrt(std::max(lo - mu, 0.0));
            for (int sign : {-1, 1}) {
                // A = d*n + c0 in sign*[lb, hb)
                const double x0 = (sign * lb - c0) / d, x1 = (sign * hb - c0) / d;
                const long a = static_cast<long>(std::ceil(std::min(x0, x1))) - 1;
                const long b = static_cast<long>(std::floor(std::max(x0, x1))) + 1;
                for (long n = a; n <= b; ++n) {
                    const double A = d * static_cast<double>(n) + c0;
                    const double v = A * A + mu;
                    if (v >= lo && v < hi) best = std::min(best, std::abs(v - t2));
                }
            }
        }
    } else if (ext.m == 2) {
        for (double mu : ext.mus) {
            if (mu >= hi) break;
            const double r = std::sqrt(hi - mu);
            for_each_dual_point(ext.dual_rows, -ext.center, r,
                                [&](const int*, const Eigen::VectorXd& cart) {
                                    const double v = (cart + ext.center).squaredNorm() + mu;
                                    if (v >= lo && v < hi)
                                        best = std::min(best, std::abs(v - t2));
                                });
        }
    } else {
        throw std::invalid_argument(
            "the straddling-cluster search is implemented for m <= 2 periodic directions");
    }
    return best;
}

} // namespace

WeightedSumResult weighted_cluster_sum(const ClusterExtremes& ext, double eps, double tau) {
    check_lemma_args(eps, tau);
    const double ta = std::abs(tau);
    const double t2 = ta * ta;
    const long need = 2 * static_cast<long>(std::ceil(ta));
    if (ext.k_max < need)
        throw std::invalid_argument("extremes table covers k <= " + std::to_string(ext.k_max) +
                                    "; tau = " + num(tau) + " needs k_max >= " +
                                    std::to_string(need));
    const double alpha = 1.0 - 2.0 * eps;
    const int k_tau = static_cast<int>(std::floor(ta)) + 1;

    WeightedSumResult out;
    out.exceptional_k = k_tau;
    for (int k = 1; k <= ext.k_max; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (ext.count[ku] == 0) continue;
        double dist;
        if (k == k_tau) {
            const double lo = static_cast<double>(k - 1) * (k - 1);
            const double hi = static_cast<double>(k) * k;
            dist = straddle_distance(ext, lo, hi, t2);
            if (std::isinf(dist)) continue;
            out.exceptional_term = std::pow(static_cast<double>(k), alpha) / (dist + ta);
        } else {
            dist = k < k_tau ? t2 - ext.hi[ku] : ext.lo[ku] - t2;
        }
        out.value += std::pow(static_cast<double>(k), alpha) / (dist + ta);
    }
    // Clusters beyond the table: each term is at most the S2-form majorant
    // k^alpha / ((k-1)^2 - tau^2 + |tau|); complete with its analytic tail.
    out.tail = s2_tail(alpha, t2 - ta, static_cast<double>(ext.k_max));
    out.value += out.tail;
    return out;
}

} // namespace tlab
