#include "gfmr/core_model.hpp"

#include <sstream>

namespace gfmr {

void Dataset::validate() const {
    if (X.rows() != Y.rows()) {
        std::ostringstream os;
        os << "design has " << X.rows() << " rows but outcome has " << Y.rows();
        throw ShapeError(os.str());
    }
    if (Y.cols() != shape.size()) {
        std::ostringstream os;
        os << "outcome has " << Y.cols() << " columns but tensor shape holds " << shape.size() << " voxels";
        throw ShapeError(os.str());
    }
    if (X.cols() < 1 || X.rows() < 1) {
        throw ShapeError("empty design matrix");
    }
}

Vector stack_subjects(const Matrix& Y) {
    Matrix Yt = Y.transpose();
    return Eigen::Map<const Vector>(Yt.data(), Yt.size());
}

Matrix unstack_subjects(const Vector& theta, Index n, Index M) {
    if (theta.size() != n * M) {
        throw ShapeError("stacked vector length is not n*M");
    }
    return Eigen::Map<const Matrix>(theta.data(), M, n).transpose();
}

ProjectionOperator::ProjectionOperator(const Matrix& X) {
    if (X.rows() < X.cols()) {
        throw RankDeficientError("design has fewer rows than columns");
    }
    qr_.setThreshold(kRankThreshold);
    qr_.compute(X);
    if (qr_.rank() < X.cols()) {
        std::ostringstream os;
        os << "design matrix has rank " << qr_.rank() << " < p = " << X.cols();
        throw RankDeficientError(os.str());
    }
    q_ = qr_.householderQ() * Matrix::Identity(X.rows(), X.cols());
}

Vector ProjectionOperator::apply(const Vector& theta) const {
    const Index rows = n();
    if (rows == 0 || theta.size() % rows != 0) {
        throw ShapeError("theta length is not a multiple of the number of subjects");
    }
    const Index M = theta.size() / rows;
    Eigen::Map<const Matrix> voxels(theta.data(), M, rows);  // column i = subject i
    Vector out(theta.size());
    Eigen::Map<Matrix> result(out.data(), M, rows);
    Matrix coords = voxels * q_;  // M x p
    result.noalias() = coords * q_.transpose();
    return out;
}

Matrix ProjectionOperator::solve(const Matrix& B) const {
    if (B.rows() != n()) {
        throw ShapeError("right-hand side row count differs from design");
    }
    return qr_.solve(B);
}

Vector project_rowspace(const ProjectionOperator& op, const Vector& theta) {
    return op.apply(theta);
}

Matrix gamma_from_theta(const ProjectionOperator& op, const Vector& theta) {
    if (theta.size() % op.n() != 0) {
        throw ShapeError("theta length is not a multiple of the number of subjects");
    }
    return op.solve(unstack_subjects(theta, op.n(), theta.size() / op.n()));
}

Vector fitted_means(const Matrix& X, const Matrix& Gamma) {
    return stack_subjects(X * Gamma);
}

FitResult ols_fit(const Dataset& data) {
    data.validate();
    ProjectionOperator op(data.X);
    FitResult out;
    out.Gamma = op.solve(data.Y);
    out.theta = fitted_means(data.X, out.Gamma);
    out.converged = true;
    return out;
}

}  // namespace gfmr
