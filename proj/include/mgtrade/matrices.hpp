#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mgtrade/domain.hpp"
#include "mgtrade/error.hpp"

namespace mgtrade {

/// Pairwise energy trades x(i, j, t): energy microgrid i receives from j in
/// slot t (negative when i delivers). The diagonal is unused and stays zero.
class TradeMatrix {
public:
    TradeMatrix() = default;
    TradeMatrix(std::size_t microgrids, std::size_t slots)
        : m_(microgrids), t_(slots), data_(microgrids * microgrids * slots, 0.0) {}

    std::size_t microgrids() const { return m_; }
    std::size_t slots() const { return t_; }

    double& operator()(std::size_t i, std::size_t j, std::size_t t) { return data_[(i * m_ + j) * t_ + t]; }
    double operator()(std::size_t i, std::size_t j, std::size_t t) const { return data_[(i * m_ + j) * t_ + t]; }

    Series series(std::size_t i, std::size_t j) const {
        const auto first = data_.begin() + static_cast<std::ptrdiff_t>((i * m_ + j) * t_);
        return Series(first, first + static_cast<std::ptrdiff_t>(t_));
    }
    void set_series(std::size_t i, std::size_t j, const Series& v) {
        detail::require_length(v, t_, "TradeMatrix::set_series");
        for (std::size_t t = 0; t < t_; ++t) (*this)(i, j, t) = v[t];
    }

    /// Σ_j x(i, j, t)
    Series net(std::size_t i) const {
        Series out(t_, 0.0);
        for (std::size_t j = 0; j < m_; ++j)
            if (j != i)
                for (std::size_t t = 0; t < t_; ++t) out[t] += (*this)(i, j, t);
        return out;
    }

    /// Euclidean norm of row i over all (j, t).
    double row_norm(std::size_t i) const {
        double s = 0.0;
        for (std::size_t j = 0; j < m_; ++j)
            for (std::size_t t = 0; t < t_; ++t) s += (*this)(i, j, t) * (*this)(i, j, t);
        return std::sqrt(s);
    }

    /// max |x(i, j, t) + x(j, i, t)|
    double antisymmetry_residual() const {
        double r = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < m_; ++j)
                for (std::size_t t = 0; t < t_; ++t) r = std::max(r, std::abs((*this)(i, j, t) + (*this)(j, i, t)));
        return r;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const TradeMatrix&) const = default;

private:
    std::size_t m_ = 0;
    std::size_t t_ = 0;
    std::vector<double> data_;
};

/// Pairwise payments p(i, j) that microgrid i pays j (negative when it receives).
class PaymentMatrix {
public:
    PaymentMatrix() = default;
    explicit PaymentMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    std::size_t size() const { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    /// Σ_j p(i, j)
    double net(std::size_t i) const {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j)
            if (j != i) s += (*this)(i, j);
        return s;
    }

    double row_norm(std::size_t i) const {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    double antisymmetry_residual() const {
        double r = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) r = std::max(r, std::abs((*this)(i, j) + (*this)(j, i)));
        return r;
    }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const PaymentMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

} // namespace mgtrade
