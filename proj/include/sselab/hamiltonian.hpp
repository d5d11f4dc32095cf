#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sselab/errors.hpp"

namespace sselab {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Hermitian operator, validated once at construction. Keeps a sparse copy
/// when that is cheaper to apply (quasi-continuum baths are star-shaped).
class Hamiltonian {
public:
    explicit Hamiltonian(MatrixXcd h, double tolerance = 1e-10) : dense_(std::move(h)) {
        if (dense_.rows() != dense_.cols() || dense_.rows() == 0)
            throw std::invalid_argument("Hamiltonian: matrix must be square and non-empty");
        const double norm = dense_.norm();
        if ((dense_ - dense_.adjoint()).norm() > tolerance * std::max(norm, 1e-300))
            throw std::invalid_argument("Hamiltonian: matrix is not Hermitian");
        const Eigen::Index n = dense_.rows();
        Eigen::Index nonzeros = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (dense_(i, j) != cd(0.0)) ++nonzeros;
        use_sparse_ = n > 8 && nonzeros < n * n / 4;
        if (use_sparse_) sparse_ = dense_.sparseView();
    }

    Eigen::Index dim() const { return dense_.rows(); }
    const MatrixXcd& dense() const { return dense_; }

    VectorXcd apply(const VectorXcd& v) const {
        if (use_sparse_) return sparse_ * v;
        return dense_ * v;
    }

    double expectation(const VectorXcd& v) const { return v.dot(apply(v)).real(); }

private:
    MatrixXcd dense_;
    Eigen::SparseMatrix<cd, Eigen::RowMajor> sparse_;
    bool use_sparse_ = false;
};

/// Eigen-decomposition H = U diag(lambda) U^dagger.
struct Eigensystem {
    Eigen::VectorXd energies;
    MatrixXcd vectors;
};

inline Eigensystem eigensystem(const Hamiltonian& h) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(h.dense());
    if (solver.info() != Eigen::Success) throw NumericFailure("eigensystem: decomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace sselab
