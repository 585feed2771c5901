#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "errors.hpp"

namespace heavytail {

// Power series c_0 + c_1 t + ... + c_R t^R; products are cut at order R.
template <class T>
class TruncatedSeries {
public:
    explicit TruncatedSeries(int order = 0) : c_(order + 1, T(0)) {}
    explicit TruncatedSeries(std::vector<T> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_.push_back(T(0));
    }

    static TruncatedSeries variable(int order) {
        TruncatedSeries s(order);
        if (order >= 1) s.c_[1] = T(1);
        return s;
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    const T& operator[](int i) const { return c_[i]; }
    T& operator[](int i) { return c_[i]; }
    const std::vector<T>& coeffs() const { return c_; }

    TruncatedSeries& operator+=(const TruncatedSeries& o) {
        for (int i = 0; i <= std::min(order(), o.order()); ++i) c_[i] += o.c_[i];
        return *this;
    }
    TruncatedSeries& operator-=(const TruncatedSeries& o) {
        for (int i = 0; i <= std::min(order(), o.order()); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    TruncatedSeries& operator*=(const T& s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
    friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
    friend TruncatedSeries operator*(TruncatedSeries a, const T& s) { return a *= s; }
    friend TruncatedSeries operator*(const T& s, TruncatedSeries a) { return a *= s; }

    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
        const int R = std::min(a.order(), b.order());
        TruncatedSeries r(R);
        for (int i = 0; i <= R; ++i) {
            if (a.c_[i] == T(0)) continue;
            for (int j = 0; i + j <= R; ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
        }
        return r;
    }

    // this(inner(t)); inner must have zero constant term
    TruncatedSeries compose(const TruncatedSeries& inner) const {
        if (inner.c_[0] != T(0)) throw DomainError("compose: inner series has a constant term");
        const int R = std::min(order(), inner.order());
        TruncatedSeries acc(R);
        for (int i = order(); i >= 0; --i) {
            acc = acc * inner;
            acc.c_[0] += c_[i];
        }
        return acc;
    }

    TruncatedSeries derivative() const {
        TruncatedSeries d(order());
        for (int i = 1; i <= order(); ++i) d.c_[i - 1] = c_[i] * T(i);
        return d;
    }

    // multiplicative inverse
    TruncatedSeries reciprocal() const {
        if (c_[0] == T(0)) throw NonInvertibleError("reciprocal: zero constant term");
        TruncatedSeries r(order());
        r.c_[0] = T(1) / c_[0];
        for (int k = 1; k <= order(); ++k) {
            T acc(0);
            for (int j = 1; j <= k; ++j) acc += c_[j] * r.c_[k - j];
            r.c_[k] = -acc / c_[0];
        }
        return r;
    }

    template <class X>
    X evaluate(const X& x) const {
        X acc(0);
        for (int i = order(); i >= 0; --i) acc = acc * x + X(c_[i]);
        return acc;
    }

private:
    std::vector<T> c_;
};

// Compositional inverse by Newton iteration g <- g - (s(g) - t)/s'(g);
// each pass doubles the number of correct coefficients.
template <class T>
TruncatedSeries<T> series_reverse(const TruncatedSeries<T>& s) {
    const int R = s.order();
    if (R < 1) throw NonInvertibleError("series_reverse: order below one");
    if (s[0] != T(0)) throw NonInvertibleError("series_reverse: nonzero constant term");
    if (s[1] == T(0)) throw NonInvertibleError("series_reverse: vanishing linear coefficient");
    TruncatedSeries<T> g(R);
    g[1] = T(1) / s[1];
    const TruncatedSeries<T> ds = s.derivative();
    const TruncatedSeries<T> id = TruncatedSeries<T>::variable(R);
    for (int correct = 1; correct < R; correct *= 2) {
        TruncatedSeries<T> resid = s.compose(g) - id;
        g -= resid * ds.compose(g).reciprocal();
    }
    return g;
}

} // namespace heavytail
