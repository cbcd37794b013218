#include <doctest.h>

#include "iobs/ltv_dt.hpp"

#include <cmath>
#include <random>

using namespace iobs::ltv_dt;
namespace mo = iobs::matops;
namespace iv = iobs::interval;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

DtLtvPlant periodic_plant() {
    DtLtvPlant p;
    p.n_x = 2;
    p.n_y = 1;
    p.n_d = 2;
    p.n_w = 1;
    p.F = [](Eigen::Index k) {
        Matrix f(2, 2);
        const double kk = static_cast<double>(k);
        f << 1.2, -1.0 + 0.5 * std::cos(kk), 0, 0.5 + 0.2 * std::sin(kk);
        return f;
    };
    p.H = [](Eigen::Index) {
        Matrix h(1, 2);
        h << 1, 0;
        return h;
    };
    p.D = [](Eigen::Index) { return Matrix(Matrix::Identity(2, 2)); };
    p.W = [](Eigen::Index) { return Matrix(Matrix::Ones(1, 1)); };
    return p;
}

iobs::ltv_ct::KklTarget periodic_target() {
    return iobs::ltv_ct::default_kkl_target({2}, iobs::lti::TimeKind::DT, 1.0);
}

}  // namespace

TEST_CASE("t_step") {
    const DtLtvPlant p = periodic_plant();
    const auto tgt = periodic_target();
    const Matrix A = tgt.A();
    const Matrix& B = tgt.B;

    SUBCASE("first step from T_0 = 0, hand-computed") {
        // F_0 = [[1.2, -0.5], [0, 0.5]]; T_1 = B*H_0*F_0^{-1}
        const Matrix t1 = t_step(Matrix::Zero(2, 2), p.F(0), p.H(0), A, B);
        CHECK(t1(0, 0) == doctest::Approx(1.0 / 1.2).epsilon(1e-14));
        CHECK(t1(0, 1) == doctest::Approx(0.5 / (1.2 * 0.5)).epsilon(1e-14));
        CHECK(t1(1, 0) == doctest::Approx(1.0 / 1.2).epsilon(1e-14));
        CHECK(t1(1, 1) == doctest::Approx(0.5 / (1.2 * 0.5)).epsilon(1e-14));
    }

    SUBCASE("defining relation holds along a trajectory") {
        Matrix t = Matrix::Zero(2, 2);
        for (Eigen::Index k = 0; k < 50; ++k) {
            const Matrix t_next = t_step(t, p.F(k), p.H(k), A, B);
            const Matrix residual = t_next * p.F(k) - A * t - B * p.H(k);
            CHECK(residual.cwiseAbs().maxCoeff() < 1e-13);
            t = t_next;
        }
    }

    SUBCASE("singular F_k is rejected") {
        Matrix f = Matrix::Zero(2, 2);
        f(0, 0) = 1.0;
        CHECK_THROWS_AS(t_step(Matrix::Zero(2, 2), f, p.H(0), A, B), SingularFk);
    }

    SUBCASE("frozen system converges to the stationary Sylvester solution") {
        Matrix f(2, 2), h(1, 2);
        f << 1.2, -0.5, 0, 0.7;
        h << 1, 0;
        Matrix t = Matrix::Zero(2, 2);
        for (int k = 0; k < 200; ++k) t = t_step(t, f, h, A, B);
        const Matrix t_stat = mo::solve_sylvester(A, f, B * h);
        CHECK((t - t_stat).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("observer_step_z") {
    SUBCASE("entrywise transcription oracle, exact") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index nz = 2 + static_cast<Eigen::Index>(rng() % 3);
            const Eigen::Index nx = nz;
            const Eigen::Index ny = 1 + static_cast<Eigen::Index>(rng() % 2);
            const Matrix A = random_matrix(rng, nz, nz).cwiseAbs() * 0.2;
            const Matrix B = random_matrix(rng, nz, ny);
            const Matrix T_next = random_matrix(rng, nz, nx);
            const Matrix D = random_matrix(rng, nx, 2);
            const Matrix W = random_matrix(rng, ny, 1);
            Vector zlo = random_matrix(rng, nz, 1);
            Vector zhi = zlo.array() + 0.4;
            const Vector y = random_matrix(rng, ny, 1);
            const Vector u = random_matrix(rng, nx, 1);
            iobs::lti::BoundsAt b;
            b.d_lo = random_matrix(rng, 2, 1);
            b.d_hi = b.d_lo.array() + 0.2;
            b.w_lo = random_matrix(rng, 1, 1);
            b.w_hi = b.w_lo.array() + 0.1;

            const auto r = observer_step_z(A, B, T_next, D, W,
                                           iv::IntervalVector(zlo, zhi), y, u, b);
            const Matrix td = T_next * D;
            const Matrix bw = B * W;
            for (Eigen::Index i = 0; i < nz; ++i) {
                double up = 0.0, lo = 0.0;
                for (Eigen::Index l = 0; l < nz; ++l) {
                    up += A(i, l) * zhi(l);
                    lo += A(i, l) * zlo(l);
                }
                for (Eigen::Index l = 0; l < ny; ++l) {
                    up += B(i, l) * y(l);
                    lo += B(i, l) * y(l);
                }
                for (Eigen::Index l = 0; l < nx; ++l) {
                    up += T_next(i, l) * u(l);
                    lo += T_next(i, l) * u(l);
                }
                for (Eigen::Index l = 0; l < 2; ++l) {
                    const double tp = std::max(td(i, l), 0.0);
                    const double tn = std::max(-td(i, l), 0.0);
                    up += tp * b.d_hi(l) - tn * b.d_lo(l);
                    lo += tp * b.d_lo(l) - tn * b.d_hi(l);
                }
                const double bp = std::max(bw(i, 0), 0.0);
                const double bn = std::max(-bw(i, 0), 0.0);
                up += bn * b.w_hi(0) - bp * b.w_lo(0);
                lo += bn * b.w_lo(0) - bp * b.w_hi(0);
                CHECK(r.up(i) == doctest::Approx(up).epsilon(1e-13));
                CHECK(r.lo(i) == doctest::Approx(lo).epsilon(1e-13));
            }
        }
    }

    SUBCASE("non-negative A preserves the ordering exactly") {
        std::mt19937_64 rng(37);
        const auto tgt = periodic_target();
        for (int trial = 0; trial < 20; ++trial) {
            Vector zlo = random_matrix(rng, 2, 1);
            Vector zhi = zlo.array() + random_matrix(rng, 2, 1).cwiseAbs().array();
            iobs::lti::BoundsAt b;
            b.d_lo = Vector::Constant(2, -0.1);
            b.d_hi = Vector::Constant(2, 0.1);
            b.w_lo = Vector::Constant(1, -0.02);
            b.w_hi = Vector::Constant(1, 0.02);
            const auto r = observer_step_z(
                tgt.A(), tgt.B, random_matrix(rng, 2, 2), Matrix::Identity(2, 2),
                Matrix::Ones(1, 1), iv::IntervalVector(zlo, zhi),
                random_matrix(rng, 1, 1), random_matrix(rng, 2, 1), b);
            CHECK((r.lo.array() <= r.up.array()).all());
        }
    }

    SUBCASE("disturbance-free width contracts at the target rate") {
        const auto tgt = periodic_target();
        const Matrix A = tgt.A();
        const double rho = mo::spectral_radius(A);
        Vector zlo = Vector::Constant(2, -1.0);
        Vector zhi = Vector::Constant(2, 1.0);
        iobs::lti::BoundsAt b;
        b.d_lo = Vector::Zero(2);
        b.d_hi = Vector::Zero(2);
        b.w_lo = Vector::Zero(1);
        b.w_hi = Vector::Zero(1);
        double prev = (zhi - zlo).maxCoeff();
        for (int k = 0; k < 30; ++k) {
            const auto r = observer_step_z(A, tgt.B, Matrix::Identity(2, 2),
                                           Matrix::Zero(2, 2), Matrix::Zero(1, 1),
                                           iv::IntervalVector(zlo, zhi),
                                           Vector::Zero(1), Vector::Zero(2), b);
            zlo = r.lo;
            zhi = r.up;
            const double w = (zhi - zlo).maxCoeff();
            CHECK(w <= prev * (rho + 1e-9) + 1e-15);
            prev = w;
        }
        CHECK(prev < 1e-15);
    }
}

TEST_CASE("uco_check") {
    const DtLtvPlant p = periodic_plant();

    SUBCASE("periodic system is uniformly observable with m = 2") {
        const auto rep = uco_check(p, {2}, 2, 100);
        CHECK(rep.positive);
        CHECK(rep.c_o_estimate > 1e-3);
    }
    SUBCASE("zero output map fails") {
        DtLtvPlant z = p;
        z.H = [](Eigen::Index) { return Matrix(Matrix::Zero(1, 2)); };
        const auto rep = uco_check(z, {2}, 2, 20);
        CHECK_FALSE(rep.positive);
    }
    SUBCASE("stationary system gives a k-independent estimate") {
        DtLtvPlant s = p;
        s.F = [](Eigen::Index) {
            Matrix f(2, 2);
            f << 1.2, -0.5, 0, 0.7;
            return f;
        };
        const auto a = uco_check(s, {2}, 2, 2);
        const auto b = uco_check(s, {2}, 2, 50);
        CHECK(a.c_o_estimate == doctest::Approx(b.c_o_estimate).epsilon(1e-12));
    }
    SUBCASE("window must start at max m_i") {
        CHECK_THROWS_AS(uco_check(p, {2}, 1, 10), std::invalid_argument);
    }
    SUBCASE("one m per output is required") {
        CHECK_THROWS_AS(uco_check(p, {2, 2}, 2, 10), std::invalid_argument);
    }
}

TEST_CASE("detect_kstar") {
    SUBCASE("two singular leading samples") {
        std::vector<double> sigma(101, 1.0);
        sigma[0] = 0.0;
        sigma[1] = 0.0;
        const auto r = detect_kstar(sigma, 0.25);
        CHECK(r.reached);
        CHECK(r.k_star == 2);
    }
    SUBCASE("qualifies from the start") {
        const auto r = detect_kstar(std::vector<double>(50, 1.0), 0.25);
        CHECK(r.reached);
        CHECK(r.k_star == 0);
    }
    SUBCASE("all singular") {
        CHECK_FALSE(detect_kstar(std::vector<double>(50, 0.0), 0.25).reached);
    }
    SUBCASE("trailing transient inside the guard window is rejected") {
        std::vector<double> sigma(101, 0.0);
        sigma[99] = 1.0;
        sigma[100] = 1.0;
        CHECK_FALSE(detect_kstar(sigma, 0.25, 0.05).reached);
    }
    SUBCASE("empty trace throws") {
        CHECK_THROWS_AS(detect_kstar({}, 0.25), std::invalid_argument);
    }
}

TEST_CASE("back_map_pinv_dt recovers points through T") {
    std::mt19937_64 rng(41);
    const Matrix t = random_matrix(rng, 3, 2);
    const Vector x = random_matrix(rng, 2, 1);
    const auto out = back_map_pinv_dt(t, iv::IntervalVector::point(t * x));
    CHECK((out.lo() - x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((out.hi() - x).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("periodic system: T becomes well conditioned by k = 2") {
    const DtLtvPlant p = periodic_plant();
    const auto tgt = periodic_target();
    const Matrix A = tgt.A();
    Matrix t = Matrix::Zero(2, 2);
    std::vector<double> sigma;
    sigma.push_back(mo::min_singular_value(t));
    for (Eigen::Index k = 0; k < 100; ++k) {
        t = t_step(t, p.F(k), p.H(k), A, tgt.B);
        sigma.push_back(mo::min_singular_value(t));
    }
    CHECK(sigma[0] == 0.0);
    CHECK(sigma[1] == doctest::Approx(0.0).epsilon(1e-12));  // rank-1 T_1
    CHECK(sigma[2] > 1e-3);
    for (size_t k = 2; k < sigma.size(); ++k) CHECK(sigma[k] > 1e-3);
}
