#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include "thomaslab/cross_section.hpp"
#include "thomaslab/free_operator.hpp"
#include "thomaslab/lattice.hpp"
#include "thomaslab/potential.hpp"

namespace tlab {

// One periodic problem on the cylinder: cross-section, period lattice,
// potential, and (optionally) a Robin weight on the two faces.
struct FiberModel {
    Lattice lattice;
    std::shared_ptr<const CrossSection> cross_section;
    PotentialSpec potential;
    std::optional<BoundarySigma> sigma;
};

struct AssemblyOptions {
    bool force_dense = false;
    // Hard cap on any dense block; assembly refuses rather than thrash.
    long dense_cap = 4000;
};

// Truncated fiber matrix. The structure of the potential decides the layout:
// no coupling at all keeps the exact diagonal, a cross-section-diagonal
// potential splits into independent blocks per cross-section index, anything
// else (including boundary weights) is dense.
class GalerkinMatrix {
public:
    enum class Layout { Diagonal, BlockDiagonal, Dense };

    Layout layout() const { return layout_; }
    long size() const;
    const ModeSet& modes() const { return *modes_; }
    std::shared_ptr<const ModeSet> modes_ptr() const { return modes_; }

    bool thomas() const { return thomas_; }
    double tau() const { return tau_; }
    double theta() const { return theta_; }
    std::complex<double> lambda() const { return lambda_; }

    std::complex<double> entry(long row, long col) const;
    Eigen::MatrixXcd to_dense() const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

    long block_count() const;
    const Eigen::MatrixXcd& block(long b) const;
    std::pair<long, long> block_range(long b) const; // [begin, end) mode indices

    // Largest and smallest singular value; exact for the diagonal layout,
    // otherwise computed blockwise by SVD.
    std::pair<double, double> singular_extremes() const;

    // max |A - A*| over entries (blockwise for structured layouts).
    double hermiticity_defect() const;

    // All eigenvalues of the Hermitian part, ascending. Only meaningful for
    // the real-quasimomentum assembly; throws if the defect is large.
    Eigen::VectorXd eigenvalues_sym() const;

private:
    friend GalerkinMatrix assemble_fiber(const FiberModel&, std::shared_ptr<const ModeSet>,
                                         bool, double, std::complex<double>,
                                         const AssemblyOptions&);
    Layout layout_ = Layout::Diagonal;
    std::shared_ptr<const ModeSet> modes_;
    bool thomas_ = false;
    double tau_ = 0, theta_ = 0;
    std::complex<double> lambda_ = 0;
    Eigen::VectorXcd diag_;                  // Diagonal layout
    std::vector<Eigen::MatrixXcd> blocks_;   // BlockDiagonal (one per j range) or Dense (one)
};

// Mode set shared between assemblies of the same model and transverse
// quasimomentum; lambda_max must not exceed the cross-section table cap.
std::shared_ptr<const ModeSet> build_modes(const FiberModel& model,
                                           const Eigen::VectorXd& xi_perp, double lambda_max);

// H(theta) at a real quasimomentum entry theta b1 + xi_perp (Hermitian).
GalerkinMatrix assemble(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                        double theta, const AssemblyOptions& opts = {});

// H(pi + i tau, xi_perp) - lambda on the same truncated basis.
GalerkinMatrix assemble_thomas(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                               double tau, std::complex<double> lambda,
                               const AssemblyOptions& opts = {});

// 1 / sigma_min(mat); +infinity when sigma_min < 1e-14 * sigma_max (the
// truncated operator is numerically non-invertible).
double resolvent_norm(const GalerkinMatrix& mat);

Eigen::VectorXd lowest_eigenvalues(const GalerkinMatrix& mat, int count);

struct BandTable {
    Eigen::VectorXd thetas;  // grid over [-pi, pi]
    Eigen::MatrixXd bands;   // count x grid, row b = b-th band function
};

// Lowest `bands` eigenvalues of H(theta) over an equispaced closed grid on
// [-pi, pi]; requires bands <= basis size / 4 so truncation error stays away
// from the reported levels.
BandTable band_functions(const FiberModel& model, std::shared_ptr<const ModeSet> modes,
                         int bands, int grid, const AssemblyOptions& opts = {});

} // namespace tlab
