#include "thomaslab/cross_section.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "thomaslab/quadrature.hpp"

namespace tlab {

int CrossSectionSpec::dim() const {
    switch (kind) {
        case Kind::Circle:
        case Kind::Interval: return 1;
        case Kind::FlatTorus: return static_cast<int>(torus_basis.rows());
        case Kind::IntervalTimesTorus: return 1 + static_cast<int>(torus_basis.rows());
    }
    return 0;
}

std::string CrossSectionSpec::describe() const {
    switch (kind) {
        case Kind::Circle: return "circle(" + std::to_string(length) + ")";
        case Kind::Interval:
            return std::string("interval(") + std::to_string(length) + "," +
                   (bc == Bc::Dirichlet ? "dirichlet" : "neumann") + ")";
        case Kind::FlatTorus: return "flat_torus(dim " + std::to_string(dim()) + ")";
        case Kind::IntervalTimesTorus:
            return std::string("interval_times_torus(") + std::to_string(length) + "," +
                   (bc == Bc::Dirichlet ? "dirichlet" : "neumann") + ",dim " +
                   std::to_string(dim()) + ")";
    }
    return "?";
}

namespace {

void validate_spec(const CrossSectionSpec& spec) {
    using Kind = CrossSectionSpec::Kind;
    if (spec.kind == Kind::Circle || spec.kind == Kind::Interval ||
        spec.kind == Kind::IntervalTimesTorus) {
        if (!(spec.length > 0))
            throw std::invalid_argument("cross-section length must be positive");
    }
    if (spec.kind == Kind::FlatTorus || spec.kind == Kind::IntervalTimesTorus) {
        if (spec.torus_basis.rows() == 0 ||
            spec.torus_basis.rows() != spec.torus_basis.cols())
            throw std::invalid_argument("torus factor needs a square basis matrix");
        if (std::abs(spec.torus_basis.determinant()) <= 0)
            throw std::invalid_argument("torus factor basis is singular");
    }
}

double interval_mu(double a, Bc bc, int j) {
    (void)bc;
    const double f = j * M_PI / a;
    return f * f;
}

int first_interval_label(Bc bc) { return bc == Bc::Dirichlet ? 1 : 0; }

bool mode_less(const CsMode& x, const CsMode& y) {
    if (x.mu != y.mu) return x.mu < y.mu;
    if (x.label != y.label) return x.label < y.label;
    return x.torus_coords < y.torus_coords;
}

} // namespace

CrossSection CrossSection::build(const CrossSectionSpec& spec, int count, double mu_cap) {
    validate_spec(spec);
    using Kind = CrossSectionSpec::Kind;

    CrossSection cs;
    cs.spec_ = spec;
    const bool has_torus = spec.kind == Kind::FlatTorus || spec.kind == Kind::IntervalTimesTorus;
    if (has_torus) {
        cs.torus_dual_ = dual_matrix(spec.torus_basis);
        cs.torus_volume_ = std::abs(spec.torus_basis.determinant());
    }
    switch (spec.kind) {
        case Kind::Circle:
        case Kind::Interval: cs.volume_ = spec.length; break;
        case Kind::FlatTorus: cs.volume_ = cs.torus_volume_; break;
        case Kind::IntervalTimesTorus: cs.volume_ = spec.length * cs.torus_volume_; break;
    }

    // Collect all modes with mu below a cap, raising the cap until `count`
    // modes exist when an explicit count was requested.
    double cap = mu_cap;
    if (count > 0) {
        cap = 10.0;
        if (spec.kind == Kind::Circle) {
            const double f = 2.0 * M_PI * count / spec.length;
            cap = f * f + 1.0;
        } else if (spec.kind == Kind::Interval) {
            const double f = (count + 1) * M_PI / spec.length;
            cap = f * f + 1.0;
        }
    }

    for (;;) {
        cs.modes_.clear();
        switch (spec.kind) {
            case Kind::Interval: {
                for (int j = first_interval_label(spec.bc);; ++j) {
                    const double mu = interval_mu(spec.length, spec.bc, j);
                    if (mu > cap) break;
                    cs.modes_.push_back({mu, j, {}});
                }
                break;
            }
            case Kind::Circle: {
                const int nmax = static_cast<int>(std::floor(std::sqrt(cap) * spec.length / (2.0 * M_PI))) + 1;
                for (int n = -nmax; n <= nmax; ++n) {
                    const double f = 2.0 * M_PI * n / spec.length;
                    const double mu = f * f;
                    if (mu <= cap) cs.modes_.push_back({mu, n, {}});
                }
                break;
            }
            case Kind::FlatTorus: {
                Eigen::VectorXd zero = Eigen::VectorXd::Zero(spec.torus_basis.rows());
                for_each_dual_point(cs.torus_dual_, zero, std::sqrt(cap),
                                    [&](const int* coords, const Eigen::VectorXd& kappa) {
                                        CsMode md;
                                        md.mu = kappa.squaredNorm();
                                        md.torus_coords.assign(coords, coords + spec.torus_basis.rows());
                                        cs.modes_.push_back(std::move(md));
                                    });
                break;
            }
            case Kind::IntervalTimesTorus: {
                Eigen::VectorXd zero = Eigen::VectorXd::Zero(spec.torus_basis.rows());
                for (int j = first_interval_label(spec.bc);; ++j) {
                    const double mu_i = interval_mu(spec.length, spec.bc, j);
                    if (mu_i > cap) break;
                    for_each_dual_point(cs.torus_dual_, zero, std::sqrt(cap - mu_i),
                                        [&](const int* coords, const Eigen::VectorXd& kappa) {
                                            CsMode md;
                                            md.mu = mu_i + kappa.squaredNorm();
                                            md.label = j;
                                            md.torus_coords.assign(coords, coords + spec.torus_basis.rows());
                                            if (md.mu <= cap * (1.0 + 1e-12)) cs.modes_.push_back(std::move(md));
                                        });
                }
                break;
            }
        }
        if (count <= 0 || static_cast<int>(cs.modes_.size()) >= count) break;
        cap *= 2.0;
    }

    std::sort(cs.modes_.begin(), cs.modes_.end(), mode_less);
    cs.complete_cap_ = cap;
    if (count > 0 && static_cast<int>(cs.modes_.size()) > count) {
        // Truncating inside a degenerate group would leave the table
        // incomplete at the cut value, so the completeness cap stops just
        // below the first excluded eigenvalue.
        cs.complete_cap_ = std::min(
            cap, std::nextafter(cs.modes_[count].mu, -std::numeric_limits<double>::infinity()));
        cs.modes_.resize(count);
    }
    return cs;
}

CrossSection CrossSection::first(const CrossSectionSpec& spec, int count) {
    if (count < 1) throw std::invalid_argument("eigenpair count must be at least 1");
    return build(spec, count, 0);
}

CrossSection CrossSection::up_to(const CrossSectionSpec& spec, double mu_cap) {
    if (!(mu_cap >= 0)) throw std::invalid_argument("eigenvalue cap must be nonnegative");
    return build(spec, 0, mu_cap);
}

bool CrossSection::has_boundary() const {
    return spec_.kind == CrossSectionSpec::Kind::Interval ||
           spec_.kind == CrossSectionSpec::Kind::IntervalTimesTorus;
}

std::complex<double> CrossSection::eval(int j, const Eigen::VectorXd& x) const {
    using Kind = CrossSectionSpec::Kind;
    const CsMode& md = modes_[j];
    switch (spec_.kind) {
        case Kind::Interval: {
            const double a = spec_.length;
            if (spec_.bc == Bc::Dirichlet)
                return std::sqrt(2.0 / a) * std::sin(md.label * M_PI * x(0) / a);
            if (md.label == 0) return std::sqrt(1.0 / a);
            return std::sqrt(2.0 / a) * std::cos(md.label * M_PI * x(0) / a);
        }
        case Kind::Circle: {
            const double arg = 2.0 * M_PI * md.label * x(0) / spec_.length;
            return std::polar(1.0 / std::sqrt(spec_.length), arg);
        }
        case Kind::FlatTorus: {
            double arg = 0;
            for (int i = 0; i < torus_dual_.rows(); ++i)
                arg += md.torus_coords[i] * torus_dual_.row(i).dot(x);
            return std::polar(1.0 / std::sqrt(torus_volume_), arg);
        }
        case Kind::IntervalTimesTorus: {
            const double a = spec_.length;
            double ival;
            if (spec_.bc == Bc::Dirichlet)
                ival = std::sqrt(2.0 / a) * std::sin(md.label * M_PI * x(0) / a);
            else if (md.label == 0)
                ival = std::sqrt(1.0 / a);
            else
                ival = std::sqrt(2.0 / a) * std::cos(md.label * M_PI * x(0) / a);
            double arg = 0;
            const Eigen::VectorXd xt = x.tail(x.size() - 1);
            for (int i = 0; i < torus_dual_.rows(); ++i)
                arg += md.torus_coords[i] * torus_dual_.row(i).dot(xt);
            return ival * std::polar(1.0 / std::sqrt(torus_volume_), arg);
        }
    }
    return 0.0;
}

double CrossSection::endpoint_value(int j, bool at_far_end) const {
    if (!has_boundary())
        throw std::logic_error("endpoint_value: cross-section has no boundary");
    const double a = spec_.length;
    const int label = modes_[j].label;
    if (spec_.bc == Bc::Dirichlet) return 0.0;
    const double amp = label == 0 ? std::sqrt(1.0 / a) : std::sqrt(2.0 / a);
    if (!at_far_end) return amp;
    return label % 2 == 0 ? amp : -amp;
}

namespace {

QuadratureGrid tensor_with_torus(const std::vector<double>& xs, const std::vector<double>& ws,
                                 const Eigen::MatrixXd& torus_basis, int res, double torus_vol) {
    const int kt = static_cast<int>(torus_basis.rows());
    long tn = 1;
    for (int i = 0; i < kt; ++i) tn *= res;
    const bool has_interval = !xs.empty();
    const long ni = has_interval ? static_cast<long>(xs.size()) : 1;
    const int cols = (has_interval ? 1 : 0) + kt;

    QuadratureGrid g;
    g.nodes.resize(ni * tn, cols);
    g.weights.resize(ni * tn);
    const double tw = torus_vol / static_cast<double>(tn);

    std::vector<int> idx(kt, 0);
    for (long r = 0; r < ni * tn; ++r) {
        const long ii = r / tn;
        // torus point from fractional coordinates idx/res
        Eigen::VectorXd tp = Eigen::VectorXd::Zero(kt);
        for (int d = 0; d < kt; ++d)
            tp += (static_cast<double>(idx[d]) / res) * torus_basis.row(d).transpose();
        int c = 0;
        if (has_interval) g.nodes(r, c++) = xs[static_cast<std::size_t>(ii)];
        for (int d = 0; d < kt; ++d) g.nodes(r, c++) = tp(d);
        g.weights(r) = (has_interval ? ws[static_cast<std::size_t>(ii)] : 1.0) * tw;
        // advance torus odometer (last dimension fastest)
        int d = kt - 1;
        while (d >= 0) {
            if (++idx[d] < res) break;
            idx[d] = 0;
            --d;
        }
    }
    return g;
}

double orthonormality_defect(const CrossSection& cs, const QuadratureGrid& g) {
    const Eigen::MatrixXcd tab = eigenfunction_table(cs, g);
    const Eigen::MatrixXcd gram =
        tab.adjoint() * g.weights.asDiagonal() * tab;
    double worst = 0;
    for (int i = 0; i < gram.rows(); ++i)
        for (int j = 0; j < gram.cols(); ++j) {
            const double dev = std::abs(gram(i, j) - (i == j ? 1.0 : 0.0));
            worst = std::max(worst, dev);
        }
    return worst;
}

QuadratureGrid build_grid(const CrossSectionSpec& spec, int resolution) {
    using Kind = CrossSectionSpec::Kind;
    switch (spec.kind) {
        case Kind::Interval: {
            auto [xs, ws] = gauss_legendre(resolution, 0.0, spec.length);
            QuadratureGrid g;
            g.nodes.resize(resolution, 1);
            g.weights.resize(resolution);
            for (int i = 0; i < resolution; ++i) {
                g.nodes(i, 0) = xs[i];
                g.weights(i) = ws[i];
            }
            return g;
        }
        case Kind::Circle: {
            QuadratureGrid g;
            g.nodes.resize(resolution, 1);
            g.weights.resize(resolution);
            for (int i = 0; i < resolution; ++i) {
                g.nodes(i, 0) = spec.length * i / resolution;
                g.weights(i) = spec.length / resolution;
            }
            return g;
        }
        case Kind::FlatTorus:
            return tensor_with_torus({}, {}, spec.torus_basis, resolution,
                                     std::abs(spec.torus_basis.determinant()));
        case Kind::IntervalTimesTorus: {
            auto [xs, ws] = gauss_legendre(resolution, 0.0, spec.length);
            return tensor_with_torus(xs, ws, spec.torus_basis, resolution,
                                     std::abs(spec.torus_basis.determinant()));
        }
    }
    throw std::logic_error("unreachable");
}

} // namespace

QuadratureGrid quadrature_grid(const CrossSectionSpec& spec, int resolution, int check_cap) {
    validate_spec(spec);
    if (resolution < 1) throw std::invalid_argument("quadrature resolution must be positive");
    QuadratureGrid g = build_grid(spec, resolution);
    if (check_cap > 0) {
        const CrossSection cs = CrossSection::first(spec, check_cap);
        if (orthonormality_defect(cs, g) > 1e-8) {
            int r = resolution;
            for (int tries = 0; tries < 16; ++tries) {
                r *= 2;
                if (orthonormality_defect(cs, build_grid(spec, r)) <= 1e-8) {
                    throw std::invalid_argument(
                        "quadrature resolution " + std::to_string(resolution) +
                        " too small for " + std::to_string(check_cap) +
                        " eigenfunctions; " + std::to_string(r) + " suffices");
                }
            }
            throw std::invalid_argument("quadrature resolution far too small");
        }
    }
    return g;
}

double lq_norm(const QuadratureGrid& grid, const Eigen::VectorXcd& values, double q) {
    if (values.size() != grid.weights.size())
        throw std::invalid_argument("lq_norm: value count does not match the grid");
    if (!(q >= 1))
        throw std::invalid_argument("lq_norm requires q >= 1");
    if (std::isinf(q)) {
        double m = 0;
        for (Eigen::Index i = 0; i < values.size(); ++i) m = std::max(m, std::abs(values(i)));
        return m;
    }
    double s = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        s += grid.weights(i) * std::pow(std::abs(values(i)), q);
    return std::pow(s, 1.0 / q);
}

Eigen::MatrixXcd eigenfunction_table(const CrossSection& cs, const QuadratureGrid& grid) {
    Eigen::MatrixXcd tab(grid.nodes.rows(), cs.count());
    for (int j = 0; j < cs.count(); ++j)
        for (Eigen::Index i = 0; i < grid.nodes.rows(); ++i)
            tab(i, j) = cs.eval(j, grid.nodes.row(i).transpose());
    return tab;
}

} // namespace tlab
