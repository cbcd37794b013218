#include "iobs/matops.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace iobs::matops {

MatrixSplit split_pm(const Matrix& m) {
    MatrixSplit s;
    s.pos = m.cwiseMax(0.0);
    s.neg = s.pos - m;
    return s;
}

bool is_metzler(const Matrix& m, double tol) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("is_metzler: matrix must be square");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < -tol)
                return false;
    return true;
}

bool is_nonnegative(const Matrix& m, double tol) {
    return (m.array() >= -tol).all();
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("eigenvalues: matrix must be square");
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw EigenSolverFailure("eigenvalue iteration did not converge");
    std::vector<std::complex<double>> out(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out[static_cast<size_t>(i)] = es.eigenvalues()(i);
    return out;
}

double max_real_part(const Matrix& m) {
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& ev : eigenvalues(m)) mx = std::max(mx, ev.real());
    return mx;
}

double spectral_radius(const Matrix& m) {
    double r = 0.0;
    for (const auto& ev : eigenvalues(m)) r = std::max(r, std::abs(ev));
    return r;
}

bool is_hurwitz(const Matrix& m) { return max_real_part(m) < 0.0; }

bool is_schur(const Matrix& m) { return spectral_radius(m) < 1.0; }

SpectralCertificate certify(const Matrix& m, double structural_tol) {
    SpectralCertificate c;
    c.max_real_part = max_real_part(m);
    c.spectral_radius = spectral_radius(m);
    c.is_metzler = is_metzler(m, structural_tol);
    c.is_nonnegative = is_nonnegative(m, structural_tol);
    c.structural_tolerance = structural_tol;
    return c;
}

namespace {

// rank of M with tolerance sigma > n * eps * sigma_max
Eigen::Index numerical_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues().size() == 0)
        return 0;
    const double smax = svd.singularValues()(0);
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * smax;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol)
            ++r;
    return r;
}

}  // namespace

bool is_controllable(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("is_controllable: A must be square");
    if (b.rows() != a.rows())
        throw std::invalid_argument("is_controllable: B row count must match A");
    const Eigen::Index n = a.rows();
    const Eigen::Index p = b.cols();
    Matrix krylov(n, n * p);
    Matrix block = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        krylov.middleCols(i * p, p) = block;
        block = a * block;
    }
    return numerical_rank(krylov) == n;
}

bool is_observable(const Matrix& f, const Matrix& h) {
    if (f.rows() != f.cols())
        throw std::invalid_argument("is_observable: F must be square");
    if (h.cols() != f.rows())
        throw std::invalid_argument("is_observable: H column count must match F");
    return is_controllable(f.transpose(), h.transpose());
}

double default_spectral_gap_tol(const Matrix& a, const Matrix& f) {
    double mag = 0.0;
    for (const auto& ev : eigenvalues(a)) mag = std::max(mag, std::abs(ev));
    for (const auto& ev : eigenvalues(f)) mag = std::max(mag, std::abs(ev));
    return 1e-8 * (1.0 + mag);
}

double spectral_gap(const Matrix& a, const Matrix& f) {
    const auto ea = eigenvalues(a);
    const auto ef = eigenvalues(f);
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& la : ea)
        for (const auto& lf : ef)
            gap = std::min(gap, std::abs(la - lf));
    return gap;
}

bool spectra_disjoint(const Matrix& a, const Matrix& f, double gap_tol) {
    if (gap_tol < 0.0)
        gap_tol = default_spectral_gap_tol(a, f);
    return spectral_gap(a, f) > gap_tol;
}

Matrix solve_sylvester(const Matrix& a, const Matrix& f, const Matrix& c) {
    if (a.rows() != a.cols() || f.rows() != f.cols())
        throw std::invalid_argument("solve_sylvester: A and F must be square");
    if (c.rows() != a.rows() || c.cols() != f.rows())
        throw std::invalid_argument("solve_sylvester: C has incompatible shape");
    if (!spectra_disjoint(a, f))
        throw NearSingularSylvester(
            "solve_sylvester: spectra of A and F overlap within tolerance");

    // Bartels-Stewart on A*T + T*(-F) = -C via complex Schur forms.
    using CMatrix = Eigen::MatrixXcd;
    Eigen::ComplexSchur<Matrix> sa(a);
    Eigen::ComplexSchur<Matrix> sf(-f);
    if (sa.info() != Eigen::Success || sf.info() != Eigen::Success)
        throw EigenSolverFailure("solve_sylvester: Schur decomposition failed");
    const CMatrix& r = sa.matrixT();
    const CMatrix& u = sa.matrixU();
    const CMatrix& s = sf.matrixT();
    const CMatrix& v = sf.matrixU();

    CMatrix q = u.adjoint() * (-c).cast<std::complex<double>>() * v;
    const Eigen::Index n = a.rows();
    const Eigen::Index m = f.rows();
    CMatrix y(n, m);
    CMatrix lhs(n, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::VectorXcd rhs = q.col(j);
        for (Eigen::Index k = 0; k < j; ++k)
            rhs -= s(k, j) * y.col(k);
        lhs = r;
        lhs.diagonal().array() += s(j, j);
        y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
    }
    return (u * y * v.adjoint()).real();
}

Matrix pinv(const Matrix& m, double rcond) {
    if (m.size() == 0)
        return Matrix(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = rcond * (sv.size() > 0 ? sv(0) : 0.0);
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff)
            inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double min_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues().size() == 0)
        return 0.0;
    return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace iobs::matops
