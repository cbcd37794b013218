#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace iobs::matops {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// M = pos - neg, both parts component-wise non-negative, disjoint supports.
struct MatrixSplit {
    Matrix pos;
    Matrix neg;
};

struct SpectralCertificate {
    double max_real_part = 0.0;
    double spectral_radius = 0.0;
    bool is_metzler = false;
    bool is_nonnegative = false;
    double structural_tolerance = 0.0;
};

class EigenSolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NearSingularSylvester : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

MatrixSplit split_pm(const Matrix& m);

bool is_metzler(const Matrix& m, double tol = 0.0);
bool is_nonnegative(const Matrix& m, double tol = 0.0);

std::vector<std::complex<double>> eigenvalues(const Matrix& m);
double max_real_part(const Matrix& m);
double spectral_radius(const Matrix& m);
bool is_hurwitz(const Matrix& m);
bool is_schur(const Matrix& m);

SpectralCertificate certify(const Matrix& m, double structural_tol = 0.0);

bool is_controllable(const Matrix& a, const Matrix& b);
bool is_observable(const Matrix& f, const Matrix& h);

double default_spectral_gap_tol(const Matrix& a, const Matrix& f);
double spectral_gap(const Matrix& a, const Matrix& f);
bool spectra_disjoint(const Matrix& a, const Matrix& f, double gap_tol = -1.0);

// Solves T*F = A*T + C (unique when eig(A) and eig(F) are disjoint).
Matrix solve_sylvester(const Matrix& a, const Matrix& f, const Matrix& c);

Matrix pinv(const Matrix& m, double rcond = 1e-13);
double min_singular_value(const Matrix& m);

}  // namespace iobs::matops
