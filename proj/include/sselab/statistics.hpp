#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace sselab {

/// Monte Carlo mean with its standard error. `std_error` is empty for n < 2.
struct EnsembleEstimate {
    double mean = 0.0;
    std::optional<double> std_error;
    std::size_t n = 0;
};

/// Streaming mean/variance (Welford). `merge` uses the pairwise update of
/// Chan et al., so a fixed merge order gives bit-identical results.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double n = na + nb;
        const double delta = other.mean_ - mean_;
        mean_ += delta * nb / n;
        m2_ += other.m2_ + delta * delta * na * nb / n;
        n_ += other.n_;
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

    EnsembleEstimate estimate() const {
        EnsembleEstimate e{mean_, std::nullopt, n_};
        if (n_ >= 2) e.std_error = std::sqrt(variance() / static_cast<double>(n_));
        return e;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Merge a sequence of partial results by a balanced pairwise tree in index order.
template <class T, class Merge>
T tree_reduce(std::vector<T> items, Merge merge) {
    if (items.empty()) return T{};
    while (items.size() > 1) {
        std::vector<T> next;
        next.reserve((items.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < items.size(); i += 2) {
            merge(items[i], items[i + 1]);
            next.push_back(std::move(items[i]));
        }
        if (items.size() % 2 == 1) next.push_back(std::move(items.back()));
        items = std::move(next);
    }
    return std::move(items.front());
}

}  // namespace sselab
