#include "thomaslab/galerkin.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace tlab {

namespace {

void check_model(const FiberModel& model) {
    if (!model.cross_section) throw std::invalid_argument("fiber model has no cross-section");
    if (!model.potential.empty() && model.potential.m() != model.lattice.dim())
        throw std::invalid_argument("potential lattice dimension does not match the model");
    if (model.sigma) {
        if (model.sigma->m() != model.lattice.dim())
            throw std::invalid_argument("boundary weight lattice dimension does not match");
        const auto& spec = model.cross_section->spec();
        if (spec.kind != CrossSectionSpec::Kind::Interval)
            throw std::invalid_argument("boundary weights require an interval cross-section");
        if (spec.bc != Bc::Neumann)
            throw std::invalid_argument("the Robin form uses the Neumann basis");
    }
}

} // namespace

std::shared_ptr<const ModeSet> build_modes(const FiberModel& model,
                                           const Eigen::VectorXd& xi_perp, double lambda_max) {
    check_model(model);
    auto ms = std::make_shared<ModeSet>(
        build_mode_set(model.lattice, *model.cross_section, xi_perp, lambda_max));
    return ms;
}

GalerkinMatrix assemble_fiber(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                              bool thomas, double angle, std::complex<double> lambda,
                              const AssemblyOptions& opts) {
    check_model(model);
    if (!modes || modes->count == 0) throw std::invalid_argument("empty mode set");
    const ModeSet& ms = *modes;
    const PotentialSpec& V = model.potential;
    const int m = ms.m;

    GalerkinMatrix out;
    out.modes_ = std::move(modes);
    out.thomas_ = thomas;
    out.tau_ = thomas ? angle : 0.0;
    out.theta_ = thomas ? M_PI : angle;
    out.lambda_ = lambda;

    const bool dense = opts.force_dense || model.sigma.has_value() ||
                       (!V.empty() && !V.cross_section_diagonal());
    if (dense)
        out.layout_ = GalerkinMatrix::Layout::Dense;
    else if (V.empty())
        out.layout_ = GalerkinMatrix::Layout::Diagonal;
    else
        out.layout_ = GalerkinMatrix::Layout::BlockDiagonal;

    Eigen::VectorXcd diag(static_cast<long>(ms.count));
    for (std::size_t i = 0; i < ms.count; ++i)
        diag[static_cast<long>(i)] =
            (thomas ? h_value(ms, i, angle) : std::complex<double>(h_value_real(ms, i, angle))) -
            lambda;

    if (out.layout_ == GalerkinMatrix::Layout::Diagonal) {
        out.diag_ = std::move(diag);
        return out;
    }

    // Block ranges: one block per cross-section index, or a single block for
    // the dense layout.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (dense)
        ranges.emplace_back(0, ms.count);
    else
        ranges = ms.j_ranges;
    for (const auto& [b, e] : ranges)
        if (static_cast<long>(e - b) > opts.dense_cap)
            throw std::length_error("assembly block of size " + std::to_string(e - b) +
                                    " exceeds the dense cap " + std::to_string(opts.dense_cap) +
                                    "; lower lambda_max or raise dense_cap");

    out.blocks_.reserve(ranges.size());
    for (const auto& [b, e] : ranges) {
        Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(e - b, e - b);
        for (std::size_t i = b; i < e; ++i) blk(i - b, i - b) = diag[static_cast<long>(i)];
        out.blocks_.push_back(std::move(blk));
    }

    // Index of the block holding each mode.
    std::vector<long> block_of(ms.count);
    for (std::size_t r = 0; r < ranges.size(); ++r)
        for (std::size_t i = ranges[r].first; i < ranges[r].second; ++i)
            block_of[i] = static_cast<long>(r);

    std::vector<int> tgt(m);
    auto add = [&](std::size_t row, std::size_t col, std::complex<double> val) {
        const long b = block_of[col];
        if (block_of[row] != b) throw std::logic_error("coupling escapes its block");
        out.blocks_[b](row - ranges[b].first, col - ranges[b].first) += val;
    };

    // Potential couplings: entry(row=(j',n+nu), col=(j,n)) = c_{j',j}(nu).
    for (const auto& [nu, c] : V.y_entries()) {
        for (std::size_t i = 0; i < ms.count; ++i) {
            const int* nc = ms.coords(i);
            for (int d = 0; d < m; ++d) tgt[d] = nc[d] + nu[d];
            const std::size_t row = ms.find(ms.j[i], tgt.data());
            if (row != ModeSet::npos) add(row, i, c);
        }
    }
    if (!V.pair_entries().empty()) {
        std::map<int, std::size_t> range_of_j;
        for (std::size_t r = 0; r < ms.j_ranges.size(); ++r) range_of_j[ms.j_of_range[r]] = r;
        for (const auto& [key, c] : V.pair_entries()) {
            auto it = range_of_j.find(key.j);
            if (it == range_of_j.end()) continue;
            const auto [cb, ce] = ms.j_ranges[it->second];
            for (std::size_t i = cb; i < ce; ++i) {
                const int* nc = ms.coords(i);
                for (int d = 0; d < m; ++d) tgt[d] = nc[d] + key.nu[d];
                const std::size_t row = ms.find(key.jp, tgt.data());
                if (row != ModeSet::npos) add(row, i, c);
            }
        }
    }

    // Robin boundary form: phi_j(a) phi_j'(a) sigma_a^(nu) at the far face
    // minus the matching term at the near face.
    if (model.sigma) {
        const CrossSection& cs = *model.cross_section;
        std::map<int, double> e0, ea;
        for (int jv : ms.j_of_range) {
            e0[jv] = cs.endpoint_value(jv, false);
            ea[jv] = cs.endpoint_value(jv, true);
        }
        std::set<std::vector<int>> offsets;
        for (const auto& [nu, c] : model.sigma->face(false)) offsets.insert(nu);
        for (const auto& [nu, c] : model.sigma->face(true)) offsets.insert(nu);
        for (const auto& nu : offsets) {
            const std::complex<double> w0 = model.sigma->hat(false, nu);
            const std::complex<double> wa = model.sigma->hat(true, nu);
            for (std::size_t i = 0; i < ms.count; ++i) {
                const int* nc = ms.coords(i);
                for (int d = 0; d < m; ++d) tgt[d] = nc[d] + nu[d];
                const int j = ms.j[i];
                for (int jp : ms.j_of_range) {
                    const std::size_t row = ms.find(jp, tgt.data());
                    if (row == ModeSet::npos) continue;
                    add(row, i, ea[jp] * ea[j] * wa - e0[jp] * e0[j] * w0);
                }
            }
        }
    }
    return out;
}

GalerkinMatrix assemble(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                        double theta, const AssemblyOptions& opts) {
    return assemble_fiber(model, std::move(modes), false, theta, 0.0, opts);
}

GalerkinMatrix assemble_thomas(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                               double tau, std::complex<double> lambda,
                               const AssemblyOptions& opts) {
    return assemble_fiber(model, std::move(modes), true, tau, lambda, opts);
}

long GalerkinMatrix::size() const {
    return modes_ ? static_cast<long>(modes_->count) : 0;
}

long GalerkinMatrix::block_count() const {
    return layout_ == Layout::Diagonal ? size() : static_cast<long>(blocks_.size());
}

const Eigen::MatrixXcd& GalerkinMatrix::block(long b) const {
    if (layout_ == Layout::Diagonal) throw std::logic_error("diagonal layout has no blocks");
    return blocks_.at(static_cast<std::size_t>(b));
}

std::pair<long, long> GalerkinMatrix::block_range(long b) const {
    if (layout_ == Layout::Dense) return {0, size()};
    if (layout_ == Layout::Diagonal) return {b, b + 1};
    long begin = 0;
    for (long i = 0; i < b; ++i) begin += blocks_[static_cast<std::size_t>(i)].rows();
    return {begin, begin + blocks_[static_cast<std::size_t>(b)].rows()};
}

std::complex<double> GalerkinMatrix::entry(long row, long col) const {
    if (row < 0 || col < 0 || row >= size() || col >= size())
        throw std::out_of_range("matrix index out of range");
    switch (layout_) {
    case Layout::Diagonal:
        return row == col ? diag_[row] : std::complex<double>(0);
    case Layout::Dense:
        return blocks_[0](row, col);
    case Layout::BlockDiagonal: {
        long begin = 0;
        for (const auto& blk : blocks_) {
            const long end = begin + blk.rows();
            if (row < end) {
                if (col < begin || col >= end) return 0;
                return blk(row - begin, col - begin);
            }
            begin = end;
        }
        return 0;
    }
    }
    return 0;
}

Eigen::MatrixXcd GalerkinMatrix::to_dense() const {
    const long n = size();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
    if (layout_ == Layout::Diagonal) {
        d.diagonal() = diag_;
    } else {
        long begin = 0;
        for (const auto& blk : blocks_) {
            d.block(begin, begin, blk.rows(), blk.cols()) = blk;
            begin += blk.rows();
        }
    }
    return d;
}

Eigen::VectorXcd GalerkinMatrix::apply(const Eigen::VectorXcd& x) const {
    if (x.size() != size()) throw std::invalid_argument("vector size does not match the matrix");
    if (layout_ == Layout::Diagonal) return diag_.cwiseProduct(x);
    Eigen::VectorXcd y(x.size());
    long begin = 0;
    for (const auto& blk : blocks_) {
        y.segment(begin, blk.rows()).noalias() = blk * x.segment(begin, blk.rows());
        begin += blk.rows();
    }
    return y;
}

std::pair<double, double> GalerkinMatrix::singular_extremes() const {
    if (size() == 0) throw std::logic_error("empty matrix");
    if (layout_ == Layout::Diagonal) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (long i = 0; i < diag_.size(); ++i) {
            const double a = std::abs(diag_[i]);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        return {hi, lo};
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& blk : blocks_) {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(blk);
        const auto& sv = svd.singularValues();
        hi = std::max(hi, sv[0]);
        lo = std::min(lo, sv[sv.size() - 1]);
    }
    return {hi, lo};
}

double GalerkinMatrix::hermiticity_defect() const {
    if (layout_ == Layout::Diagonal) {
        double d = 0;
        for (long i = 0; i < diag_.size(); ++i) d = std::max(d, 2.0 * std::abs(diag_[i].imag()));
        return d;
    }
    double d = 0;
    for (const auto& blk : blocks_)
        d = std::max(d, (blk - blk.adjoint()).cwiseAbs().maxCoeff());
    return d;
}

Eigen::VectorXd GalerkinMatrix::eigenvalues_sym() const {
    const auto [hi, lo] = singular_extremes();
    if (hermiticity_defect() > 1e-8 * std::max(hi, 1.0))
        throw std::logic_error("matrix is not Hermitian; eigenvalues_sym needs the real fiber");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(size()));
    if (layout_ == Layout::Diagonal) {
        for (long i = 0; i < diag_.size(); ++i) vals.push_back(diag_[i].real());
    } else {
        for (const auto& blk : blocks_) {
            Eigen::MatrixXcd sym = 0.5 * (blk + blk.adjoint());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym, Eigen::EigenvaluesOnly);
            for (long i = 0; i < es.eigenvalues().size(); ++i)
                vals.push_back(es.eigenvalues()[i]);
        }
    }
    std::sort(vals.begin(), vals.end());
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

double resolvent_norm(const GalerkinMatrix& mat) {
    const auto [hi, lo] = mat.singular_extremes();
    if (lo < 1e-14 * hi) return std::numeric_limits<double>::infinity();
    return 1.0 / lo;
}

Eigen::VectorXd lowest_eigenvalues(const GalerkinMatrix& mat, int count) {
    if (count < 1 || count > mat.size())
        throw std::invalid_argument("eigenvalue count outside [1, size]");
    return mat.eigenvalues_sym().head(count);
}

BandTable band_functions(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                         int bands, int grid, const AssemblyOptions& opts) {
    if (!modes) throw std::invalid_argument("empty mode set");
    if (grid < 2) throw std::invalid_argument("band grid needs at least two points");
    if (bands < 1 || static_cast<std::size_t>(bands) * 4 > modes->count)
        throw std::invalid_argument(
            "band count must be at least 1 and at most a quarter of the basis size");
    BandTable table;
    table.thetas.resize(grid);
    table.bands.resize(bands, grid);
    for (int g = 0; g < grid; ++g) {
        const double theta = -M_PI + 2.0 * M_PI * g / (grid - 1);
        table.thetas[g] = theta;
        const GalerkinMatrix h = assemble(model, modes, theta, opts);
        table.bands.col(g) = lowest_eigenvalues(h, bands);
    }
    return table;
}

} // namespace tlab
