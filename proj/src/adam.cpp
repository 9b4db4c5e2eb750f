#include "covgnn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace covgnn {

AdamState::AdamState(AdamConfig config, const std::vector<Tensor*>& params)
    : config_(config) {
    if (config_.learning_rate <= 0) throw std::invalid_argument("Adam: learning rate must be > 0");
    if (config_.decay_interval <= 0) throw std::invalid_argument("Adam: decay interval must be > 0");
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->rows, p->cols);
        v_.emplace_back(p->rows, p->cols);
    }
}

double AdamState::effective_lr() const {
    return config_.learning_rate *
           std::pow(config_.decay_factor, steps_ / config_.decay_interval);
}

void AdamState::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam: parameter layout mismatch");
    const double lr = effective_lr();
    ++steps_;
    const double bc1 = 1.0 - std::pow(config_.beta1, steps_);
    const double bc2 = 1.0 - std::pow(config_.beta2, steps_);
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& param = *params[p];
        const Tensor& grad = *grads[p];
        if (!param.same_shape(m_[p]) || !grad.same_shape(m_[p]))
            throw std::invalid_argument("Adam: tensor shape mismatch");
        for (size_t i = 0; i < param.size(); ++i) {
            const double g = grad.v[i];
            m_[p].v[i] = config_.beta1 * m_[p].v[i] + (1.0 - config_.beta1) * g;
            v_[p].v[i] = config_.beta2 * v_[p].v[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m_[p].v[i] / bc1;
            const double v_hat = v_[p].v[i] / bc2;
            param.v[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

}  // namespace covgnn
