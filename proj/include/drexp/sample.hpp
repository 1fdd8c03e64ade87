#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "drexp/error.hpp"

namespace drexp {

/// Observations x_N = (X_1, ..., X_N): nonempty, all finite.
class Sample {
public:
    Sample(std::vector<double> values) : values_(std::move(values)) { validate(); }
    Sample(std::initializer_list<double> values) : values_(values) { validate(); }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> view() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double mean() const { return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size()); }

    /// Biased (1/N) variance about the sample mean.
    double variance_mle() const {
        const double m = mean();
        double s = 0.0;
        for (double v : values_) s += (v - m) * (v - m);
        return s / static_cast<double>(size());
    }

private:
    void validate() const {
        if (values_.empty()) throw DomainError("sample must contain at least one observation");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw DomainError("sample value " + std::to_string(i + 1) + " is not finite");
    }

    std::vector<double> values_;
};

} // namespace drexp
