#include "iobs/interval.hpp"

namespace iobs::interval {

IntervalVector::IntervalVector(Vector lo, Vector hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size())
        throw std::invalid_argument("IntervalVector: lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
        if (!(lo_(i) <= hi_(i)))
            throw std::invalid_argument("IntervalVector: lo > hi at component " +
                                        std::to_string(i));
}

IntervalVector IntervalVector::clamped(Vector lo, Vector hi, double tol) {
    for (Eigen::Index i = 0; i < lo.size() && i < hi.size(); ++i) {
        if (lo(i) > hi(i)) {
            const double scale = 1.0 + std::max(std::abs(lo(i)), std::abs(hi(i)));
            if (lo(i) - hi(i) > tol * scale)
                throw std::invalid_argument(
                    "IntervalVector::clamped: inversion exceeds tolerance at component " +
                    std::to_string(i));
            const double mid = 0.5 * (lo(i) + hi(i));
            lo(i) = hi(i) = mid;
        }
    }
    return {std::move(lo), std::move(hi)};
}

IntervalVector interval_image(const Matrix& a, const IntervalVector& iv) {
    if (a.cols() != iv.size())
        throw std::invalid_argument("interval_image: dimension mismatch");
    const auto s = matops::split_pm(a);
    return {s.pos * iv.lo() - s.neg * iv.hi(), s.pos * iv.hi() - s.neg * iv.lo()};
}

bool contains(const IntervalVector& iv, const Vector& x, double slack) {
    if (iv.size() != x.size())
        throw std::invalid_argument("contains: dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double pad = slack * (1.0 + std::abs(x(i)));
        if (x(i) < iv.lo()(i) - pad || x(i) > iv.hi()(i) + pad)
            return false;
    }
    return true;
}

double violation(const IntervalVector& iv, const Vector& x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = 1.0 + std::abs(x(i));
        worst = std::max(worst, (iv.lo()(i) - x(i)) / scale);
        worst = std::max(worst, (x(i) - iv.hi()(i)) / scale);
    }
    return worst;
}

double width(const IntervalVector& iv) {
    if (iv.size() == 0)
        return 0.0;
    return (iv.hi() - iv.lo()).maxCoeff();
}

}  // namespace iobs::interval
