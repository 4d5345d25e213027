#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "thomaslab/lattice.hpp"

namespace tlab {

enum class Bc { Dirichlet, Neumann };

struct CrossSectionSpec {
    enum class Kind { Circle, Interval, FlatTorus, IntervalTimesTorus };

    Kind kind = Kind::Interval;
    double length = 0;              // circumference (Circle) or interval length
    Bc bc = Bc::Dirichlet;          // interval factor only
    Eigen::MatrixXd torus_basis;    // rows; flat torus factor, not rescaled

    int dim() const;
    std::string describe() const;
};

// One Laplace eigenpair of the cross-section; the canonical ordering is by
// (mu, interval label, torus coords lexicographic), which resolves all
// degeneracies reproducibly.
struct CsMode {
    double mu = 0;
    int label = 0;                  // interval j / circle winding number
    std::vector<int> torus_coords;  // empty unless a torus factor is present
};

class CrossSection {
public:
    // First `count` eigenpairs in canonical order.
    static CrossSection first(const CrossSectionSpec& spec, int count);
    // All eigenpairs with mu <= mu_cap.
    static CrossSection up_to(const CrossSectionSpec& spec, double mu_cap);

    const CrossSectionSpec& spec() const { return spec_; }
    int dim() const { return spec_.dim(); }
    double volume() const { return volume_; }
    bool has_boundary() const;
    int count() const { return static_cast<int>(modes_.size()); }
    double mu(int j) const { return modes_[j].mu; }
    const CsMode& mode(int j) const { return modes_[j]; }
    // Every eigenpair with mu <= complete_cap() is present in the table.
    double complete_cap() const { return complete_cap_; }

    // Eigenfunction value; x holds the interval coordinate first (when
    // present), then cartesian torus coordinates.
    std::complex<double> eval(int j, const Eigen::VectorXd& x) const;

    // Interval-factor endpoint value of mode j (requires a boundary).
    double endpoint_value(int j, bool at_far_end) const;

    // Dual basis rows of the torus factor (empty matrix if none).
    const Eigen::MatrixXd& torus_dual() const { return torus_dual_; }

private:
    CrossSection() = default;
    static CrossSection build(const CrossSectionSpec& spec, int count, double mu_cap);

    CrossSectionSpec spec_;
    std::vector<CsMode> modes_;
    double volume_ = 0;
    double torus_volume_ = 1;
    double complete_cap_ = 0;
    Eigen::MatrixXd torus_dual_;
};

struct QuadratureGrid {
    Eigen::MatrixXd nodes;   // one point per row
    Eigen::VectorXd weights; // sum equals vol(M)
};

// Tensor rule: Gauss-Legendre on the interval factor, equispaced (trapezoid)
// nodes on periodic factors. `resolution` is the per-dimension node count.
// When check_cap > 0 the rule is validated against quadrature orthonormality
// of the first check_cap eigenfunctions at 1e-8 and rejected (naming the
// smallest adequate resolution) if it fails.
QuadratureGrid quadrature_grid(const CrossSectionSpec& spec, int resolution, int check_cap = 0);

// (sum_i w_i |f_i|^q)^(1/q); max_i |f_i| when q is infinite. Requires q >= 1.
double lq_norm(const QuadratureGrid& grid, const Eigen::VectorXcd& values, double q);

// Eigenfunction table: column j holds phi_j at the grid nodes.
Eigen::MatrixXcd eigenfunction_table(const CrossSection& cs, const QuadratureGrid& grid);

} // namespace tlab
