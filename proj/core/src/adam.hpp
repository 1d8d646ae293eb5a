#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace emgc::detail {

/// Adam moment accumulators for a flat parameter vector.
class AdamState {
public:
    AdamState(std::size_t n, double beta1, double beta2)
        : beta1_(beta1), beta2_(beta2), m1_(n, 0.0), m2_(n, 0.0) {}

    void reset() {
        std::fill(m1_.begin(), m1_.end(), 0.0);
        std::fill(m2_.begin(), m2_.end(), 0.0);
        step_ = 0;
        pow1_ = 1.0;
        pow2_ = 1.0;
    }

    void update(std::span<double> x, std::span<const double> grad, double lr) {
        ++step_;
        pow1_ *= beta1_;
        pow2_ *= beta2_;
        const double c1 = 1.0 - pow1_;
        const double c2 = 1.0 - pow2_;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m1_[i] = beta1_ * m1_[i] + (1.0 - beta1_) * grad[i];
            m2_[i] = beta2_ * m2_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            x[i] -= lr * (m1_[i] / c1) / (std::sqrt(m2_[i] / c2) + kEpsilon);
        }
    }

private:
    static constexpr double kEpsilon = 1e-8;
    double beta1_;
    double beta2_;
    std::vector<double> m1_;
    std::vector<double> m2_;
    long step_ = 0;
    double pow1_ = 1.0;
    double pow2_ = 1.0;
};

}  // namespace emgc::detail
