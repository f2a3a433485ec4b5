#pragma once

#include <cmath>
#include <vector>

#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"

namespace adasin {

struct SgdOptions {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
};

/// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
template <class Derived>
void sgd_step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Derived>& grad,
              Eigen::MatrixBase<Derived>& velocity, const SgdOptions& opt) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
        param.rows() != velocity.rows() || param.cols() != velocity.cols())
        throw ShapeMismatch("parameter, gradient and momentum buffer shapes differ");
    velocity = opt.momentum * velocity + grad + opt.weight_decay * param;
    param -= opt.lr * velocity;
}

/// Learning rate at a zero-based epoch: lr0 * factor^(number of drops <= epoch).
inline double scheduled_lr(double lr0, const std::vector<int>& drop_epochs, double factor,
                           int epoch) {
    double lr = lr0;
    for (int d : drop_epochs)
        if (d <= epoch) lr *= factor;
    return lr;
}

}  // namespace adasin
