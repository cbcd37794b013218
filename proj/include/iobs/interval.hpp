#pragma once

#include "iobs/matops.hpp"

namespace iobs::interval {

using matops::Matrix;
using matops::Vector;

// Paired component-wise bounds, lo <= hi enforced at construction.
class IntervalVector {
public:
    IntervalVector(Vector lo, Vector hi);
    static IntervalVector point(const Vector& v) { return {v, v}; }

    // Reorders inversions no deeper than tol*(1+|value|); larger ones still throw.
    // Integration roundoff can flip near-degenerate bounds by a few ulp.
    static IntervalVector clamped(Vector lo, Vector hi, double tol);

    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }
    Eigen::Index size() const { return lo_.size(); }

private:
    Vector lo_;
    Vector hi_;
};

// lo' = A+ lo - A- hi,  hi' = A+ hi - A- lo
IntervalVector interval_image(const Matrix& a, const IntervalVector& iv);

// Relative slack: lo - slack*(1+|x|) <= x <= hi + slack*(1+|x|) component-wise.
bool contains(const IntervalVector& iv, const Vector& x, double slack);

// Worst-case violation depth under the same relative scaling; <= 0 when contained.
double violation(const IntervalVector& iv, const Vector& x);

double width(const IntervalVector& iv);

inline constexpr double kCtSlack = 1e-7;
inline constexpr double kDtSlack = 1e-12;

}  // namespace iobs::interval
