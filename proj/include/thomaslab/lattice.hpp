#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace tlab {

// Basis rows d_j of the lattice dual to the one spanned by the rows b_k:
// <b_k, d_j> = 2*pi*delta_kj. Throws on a singular basis.
Eigen::MatrixXd dual_matrix(const Eigen::MatrixXd& basis_rows);

struct DualPoint {
    std::vector<int> coords;
    Eigen::VectorXd cartesian;
};

// Visits every integer combination n of the rows of dual_rows with
// |sum_j n_j d_j - center| <= radius, in lexicographic order of the integer
// coordinates. Boundary points count as inside; a 1e-12 relative slack on the
// squared radius absorbs rounding of |cartesian - center|^2 against radius^2.
void for_each_dual_point(const Eigen::MatrixXd& dual_rows,
                         const Eigen::VectorXd& center, double radius,
                         const std::function<void(const int* coords, const Eigen::VectorXd& cart)>& fn);

std::vector<DualPoint> enumerate_points(const Eigen::MatrixXd& dual_rows,
                                        const Eigen::VectorXd& center, double radius);

// Period lattice of the cylinder. The constructor rescales the whole basis
// by 1/|b1| (a global dilation), so |b1| = 1 always holds afterwards.
class Lattice {
public:
    explicit Lattice(Eigen::MatrixXd basis_rows);

    int dim() const { return static_cast<int>(basis_.rows()); }
    const Eigen::MatrixXd& basis() const { return basis_; }
    Eigen::VectorXd b1() const { return basis_.row(0); }
    const Eigen::MatrixXd& dual() const { return dual_; }
    double cell_volume() const { return cell_volume_; }

private:
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd dual_;
    double cell_volume_ = 0;
};

struct DualLattice {
    Eigen::MatrixXd basis; // rows
};

DualLattice dual_basis(const Lattice& lat);

std::vector<DualPoint> enumerate_dual_points(const Lattice& lat,
                                             const Eigen::VectorXd& center, double radius);

} // namespace tlab
