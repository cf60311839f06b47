// Reference implementations used only by tests. Nothing here calls the
// library's Hamiltonian builders or eigensolvers.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcjc/model.hpp"

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Eig {
  Vec values;   // ascending
  Mat vectors;  // columns
};

/// Cyclic Jacobi rotations on a symmetric matrix.
Eig jacobi(Mat a, double tol = 1e-14, int max_sweeps = 60);

/// Full Hamiltonian by Kronecker products, site 0 most significant.
Mat kron_hamiltonian(const mcjc::model::ModelParams& p);
/// Total charge of every product state in the same ordering.
std::vector<int> product_charges(const mcjc::model::ModelParams& p);
/// Rows/columns of `h` with total charge N, in ascending code order.
Mat restrict_to_sector(const Mat& h, const std::vector<int>& charges, int N);
/// Operator on one site embedded into the full space.
Mat embed(const mcjc::model::ModelParams& p, int site, const Mat& local);

Mat sigma_plus();
Mat annihilate(int n_max);

/// Lowest sector eigenvalue through Jacobi.
double sector_ground_energy(const mcjc::model::ModelParams& p, int N);

}  // namespace oracle
