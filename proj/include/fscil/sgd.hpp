#pragma once

#include <cmath>
#include <map>
#include <string>

#include "fscil/data.hpp"
#include "fscil/errors.hpp"

namespace fscil {

// Stochastic gradient descent with momentum, decoupled before the velocity
// update so it matches the usual deep-learning convention:
//   g = grad + weight_decay * theta
//   v = momentum * v + g
//   theta -= lr * v
struct SgdConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
};

class Sgd {
  public:
    explicit Sgd(SgdConfig cfg) : cfg_(cfg) {
        if (cfg.lr <= 0.0) throw InvalidConfig("sgd: lr must be > 0");
        if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
            throw InvalidConfig("sgd: momentum must be in [0, 1)");
        if (cfg.weight_decay < 0.0)
            throw InvalidConfig("sgd: weight_decay must be >= 0");
    }

    // One update for a named parameter. Velocity is keyed by name and created
    // lazily at zero.
    void step(const std::string& name, Matrix& theta, const Matrix& grad, double lr) {
        if (theta.rows() != grad.rows() || theta.cols() != grad.cols())
            throw ShapeMismatch("sgd: grad shape != param shape for " + name);
        Matrix g = grad + cfg_.weight_decay * theta;
        auto [it, fresh] = velocity_.try_emplace(name, Matrix::Zero(theta.rows(), theta.cols()));
        it->second = cfg_.momentum * it->second + g;
        theta -= lr * it->second;
    }

    void step(const std::string& name, Matrix& theta, const Matrix& grad) {
        step(name, theta, grad, cfg_.lr);
    }

    const SgdConfig& config() const { return cfg_; }

  private:
    SgdConfig cfg_;
    std::map<std::string, Matrix> velocity_;
};

// Step decay: lr * factor^floor(epoch / every). `every` <= 0 disables decay.
inline double stepped_lr(double base_lr, double factor, int every, int epoch) {
    if (every <= 0) return base_lr;
    return base_lr * std::pow(factor, static_cast<double>(epoch / every));
}

}  // namespace fscil
