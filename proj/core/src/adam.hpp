#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace bsg::detail {

/// Adam moments for one flat parameter buffer.
class AdamSlot {
public:
    explicit AdamSlot(std::size_t size = 0) : m_(size, 0.0), v_(size, 0.0) {}

    void step(double* param, const double* grad, double lr, std::size_t t, double beta1 = 0.9, double beta2 = 0.999,
              double eps = 1e-8) {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < m_.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
            param[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

private:
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace bsg::detail
