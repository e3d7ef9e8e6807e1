#pragma once

#include "gfmr/tensor.hpp"
#include "gfmr/types.hpp"

#include <Eigen/QR>

#include <vector>

namespace gfmr {

// Design X (n x p), outcomes Y (n x M, row i = vec of subject i's tensor).
struct Dataset {
    Matrix X;
    Matrix Y;
    TensorShape shape;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    Index M() const { return Y.cols(); }

    // Throws ShapeError when X, Y and shape disagree.
    void validate() const;
};

// Subject-major stacking: theta = (Y_1, ..., Y_n) = vec(Y^T).
Vector stack_subjects(const Matrix& Y);
// Inverse of stack_subjects for a theta of length n*M.
Matrix unstack_subjects(const Vector& theta, Index n, Index M);

// Projection onto the column space of X applied voxel by voxel,
// i.e. (H kron I_M) theta with H = X (X^T X)^{-1} X^T. The nM x nM
// operator is never formed; theta is viewed as M x n and multiplied by
// Q Q^T from the right, where Q is an orthonormal basis of span(X).
class ProjectionOperator {
public:
    // Throws RankDeficientError if rank(X) < p (relative pivot threshold 1e-10).
    explicit ProjectionOperator(const Matrix& X);

    Index n() const { return q_.rows(); }
    Index p() const { return q_.cols(); }
    const Matrix& basis() const { return q_; }

    Vector apply(const Vector& theta) const;
    // Least-squares coefficients (X^T X)^{-1} X^T B for B with n rows.
    Matrix solve(const Matrix& B) const;

    static constexpr double kRankThreshold = 1e-10;

private:
    Eigen::ColPivHouseholderQR<Matrix> qr_;
    Matrix q_;
};

Vector project_rowspace(const ProjectionOperator& op, const Vector& theta);

struct IterationRecord {
    double rel_change = 0.0;   // ||theta_k - theta_{k-1}|| / ||theta_{k-1}||
    double feasibility = 0.0;  // ||theta_k - P theta_k|| / (1 + ||theta_k||)
    double objective = 0.0;    // objective (P) at the coefficients recovered from theta_k
};

struct FitResult {
    Matrix Gamma;  // p x M
    Vector theta;  // n*M, subject-major fitted means X Gamma
    std::vector<IterationRecord> diagnostics;
    int iterations = 0;
    bool converged = false;
    bool inner_converged = true;  // every fused-lasso subproblem met its tolerance
};

FitResult ols_fit(const Dataset& data);

// Gamma = (X^T X)^{-1} X^T mat(theta)_{n x M}.
Matrix gamma_from_theta(const ProjectionOperator& op, const Vector& theta);

// vec((X Gamma)^T)
Vector fitted_means(const Matrix& X, const Matrix& Gamma);

}  // namespace gfmr
