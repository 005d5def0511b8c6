#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fscil/data.hpp"
#include "fscil/encoder.hpp"
#include "fscil/rng.hpp"

namespace testutil {

using fscil::ImageShape;
using fscil::LabeledSet;
using fscil::Matrix;

inline Matrix random_matrix(fscil::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// A deterministic set with `per_class` samples of each class id in `ids`,
// drawn around well-separated integer-lattice means.
inline LabeledSet lattice_set(const std::vector<int>& ids, int per_class,
                              ImageShape shape, std::uint64_t seed,
                              double spread = 0.1) {
    fscil::Rng rng = fscil::make_rng(seed, "lattice");
    std::normal_distribution<double> gauss(0.0, spread);
    const int dim = shape.size();
    const int n = static_cast<int>(ids.size()) * per_class;
    Matrix inputs(n, dim);
    std::vector<int> labels;
    labels.reserve(static_cast<size_t>(n));
    int row = 0;
    for (size_t c = 0; c < ids.size(); ++c) {
        for (int i = 0; i < per_class; ++i, ++row) {
            for (int k = 0; k < dim; ++k)
                inputs(row, k) =
                    (k == static_cast<int>(c) % dim ? 10.0 * (1.0 + static_cast<double>(c) / dim) : 0.0) +
                    gauss(rng);
            labels.push_back(ids[c]);
        }
    }
    return fscil::make_labeled_set(std::move(inputs), std::move(labels), shape,
                                   std::vector<int>(ids));
}

// max over entries of |a - n| / max(1e-6, |a|, |n|)
inline double max_rel_err(const Matrix& analytic, const Matrix& numeric) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
            const double a = analytic(i, j), n = numeric(i, j);
            const double denom = std::max({1e-6, std::abs(a), std::abs(n)});
            worst = std::max(worst, std::abs(a - n) / denom);
        }
    return worst;
}

// Central finite differences of a scalar function, elementwise over x.
inline Matrix fd_grad(const std::function<double(const Matrix&)>& f, Matrix x,
                      double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double saved = x(i, j);
            x(i, j) = saved + h;
            const double up = f(x);
            x(i, j) = saved - h;
            const double down = f(x);
            x(i, j) = saved;
            g(i, j) = (up - down) / (2.0 * h);
        }
    return g;
}

// Finite differences over a named parameter of an encoder, with the loss
// evaluated on the whole (mutated) encoder state.
inline Matrix fd_grad_param(const std::function<double(const fscil::EncoderState&)>& loss,
                            fscil::EncoderState enc, const std::string& name,
                            double h = 1e-5) {
    Matrix& theta = enc.params.at(name);
    Matrix g(theta.rows(), theta.cols());
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
            const double saved = theta(i, j);
            theta(i, j) = saved + h;
            const double up = loss(enc);
            theta(i, j) = saved - h;
            const double down = loss(enc);
            theta(i, j) = saved;
            g(i, j) = (up - down) / (2.0 * h);
        }
    return g;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testutil
