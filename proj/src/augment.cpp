#include "fscil/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fscil/errors.hpp"

namespace fscil {
namespace {

// Flattened channel-major pixel index within one sample row.
inline int pix(const ImageShape& s, int c, int y, int x) {
    return c * s.height * s.width + y * s.width + x;
}

// Bilinear sample of channel c at fractional coordinates, clamped to bounds.
double bilinear(const Eigen::RowVectorXd& row, const ImageShape& s, int c,
                double fy, double fx) {
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, s.height - 1);
    const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, s.width - 1);
    const int y1 = std::min(y0 + 1, s.height - 1);
    const int x1 = std::min(x0 + 1, s.width - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    const double wx = std::clamp(fx - x0, 0.0, 1.0);
    const double top =
        (1.0 - wx) * row(pix(s, c, y0, x0)) + wx * row(pix(s, c, y0, x1));
    const double bot =
        (1.0 - wx) * row(pix(s, c, y1, x0)) + wx * row(pix(s, c, y1, x1));
    return (1.0 - wy) * top + wy * bot;
}

void resized_crop_sample(Eigen::RowVectorXd& row, const ImageShape& s, Rng& rng) {
    std::uniform_real_distribution<double> scale_dist(0.7, 1.0);
    const double scale = scale_dist(rng);
    const int ch = std::max(1, static_cast<int>(std::lround(scale * s.height)));
    const int cw = std::max(1, static_cast<int>(std::lround(scale * s.width)));
    std::uniform_int_distribution<int> ty_dist(0, s.height - ch);
    std::uniform_int_distribution<int> tx_dist(0, s.width - cw);
    const int ty = ty_dist(rng);
    const int tx = tx_dist(rng);

    const Eigen::RowVectorXd src = row;
    for (int c = 0; c < s.channels; ++c)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                const double fy = ty + (y + 0.5) * ch / static_cast<double>(s.height) - 0.5;
                const double fx = tx + (x + 0.5) * cw / static_cast<double>(s.width) - 0.5;
                row(pix(s, c, y, x)) = bilinear(src, s, c, fy, fx);
            }
}

void flip_sample(Eigen::RowVectorXd& row, const ImageShape& s) {
    for (int c = 0; c < s.channels; ++c)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width / 2; ++x)
                std::swap(row(pix(s, c, y, x)), row(pix(s, c, y, s.width - 1 - x)));
}

void jitter_sample(Eigen::RowVectorXd& row, const ImageShape& s, Rng& rng) {
    std::uniform_real_distribution<double> factor(0.8, 1.2);
    row *= factor(rng);  // brightness
    const int plane = s.height * s.width;
    for (int c = 0; c < s.channels; ++c) {
        const double contrast = factor(rng);
        auto seg = row.segment(c * plane, plane);
        const double mean = seg.mean();
        seg = ((seg.array() - mean) * contrast + mean).matrix();
    }
}

}  // namespace

Matrix rotate_image_rows(const Matrix& inputs, const ImageShape& shape, int angle) {
    if (inputs.cols() != shape.size())
        throw ShapeMismatch("rotate: inputs cols != shape size");
    if (angle != 90 && angle != 180 && angle != 270)
        throw InvalidConfig("rotate: angle must be 90, 180 or 270");
    if (angle != 180 && !shape.square())
        throw NonSquareInput("rotate: 90/270 degrees needs square planes");

    const int h = shape.height, w = shape.width;
    Matrix out(inputs.rows(), inputs.cols());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        for (int c = 0; c < shape.channels; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    int sy, sx;
                    if (angle == 90) {          // clockwise
                        sy = h - 1 - x;
                        sx = y;
                    } else if (angle == 180) {
                        sy = h - 1 - y;
                        sx = w - 1 - x;
                    } else {                    // 270 clockwise = 90 ccw
                        sy = x;
                        sx = w - 1 - y;
                    }
                    out(i, pix(shape, c, y, x)) = inputs(i, pix(shape, c, sy, sx));
                }
    return out;
}

AugmentationPolicy policy_from_names(const std::vector<std::string>& names) {
    AugmentationPolicy p;
    for (const auto& n : names) {
        if (n == "resized-crop")
            p.resized_crop = true;
        else if (n == "horizontal-flip")
            p.horizontal_flip = true;
        else if (n == "color-jitter")
            p.color_jitter = true;
        else
            throw InvalidConfig("unknown augmentation policy: " + n);
    }
    return p;
}

std::vector<std::string> policy_names(const AugmentationPolicy& policy) {
    std::vector<std::string> names;
    if (policy.resized_crop) names.push_back("resized-crop");
    if (policy.horizontal_flip) names.push_back("horizontal-flip");
    if (policy.color_jitter) names.push_back("color-jitter");
    return names;
}

Matrix augment_batch(const Matrix& batch, const ImageShape& shape,
                     const AugmentationPolicy& policy, Rng& rng) {
    if (batch.cols() != shape.size())
        throw ShapeMismatch("augment_batch: batch cols != shape size");
    Matrix out = batch;
    std::bernoulli_distribution coin(0.5);
    Eigen::RowVectorXd row;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        row = out.row(i);
        if (policy.resized_crop) resized_crop_sample(row, shape, rng);
        if (policy.horizontal_flip && coin(rng)) flip_sample(row, shape);
        if (policy.color_jitter) jitter_sample(row, shape, rng);
        out.row(i) = row;
    }
    return out;
}

Matrix mixup_rows(const Matrix& a, const Matrix& b, double lambda) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch("mixup_rows: operand shapes differ");
    if (lambda < 0.0 || lambda > 1.0)
        throw InvalidConfig("mixup_rows: lambda must be in [0, 1]");
    return lambda * a + (1.0 - lambda) * b;
}

Matrix cutmix_rows(const Matrix& a, const Matrix& b, const ImageShape& shape,
                   Rng& rng) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch("cutmix_rows: operand shapes differ");
    if (a.cols() != shape.size())
        throw ShapeMismatch("cutmix_rows: cols != shape size");

    Matrix out = a;
    std::uniform_real_distribution<double> frac(0.3, 0.7);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const int ph = std::max(1, static_cast<int>(std::lround(frac(rng) * shape.height)));
        const int pw = std::max(1, static_cast<int>(std::lround(frac(rng) * shape.width)));
        std::uniform_int_distribution<int> ty_dist(0, shape.height - ph);
        std::uniform_int_distribution<int> tx_dist(0, shape.width - pw);
        const int ty = ty_dist(rng);
        const int tx = tx_dist(rng);
        for (int c = 0; c < shape.channels; ++c)
            for (int y = ty; y < ty + ph; ++y)
                for (int x = tx; x < tx + pw; ++x)
                    out(i, pix(shape, c, y, x)) = b(i, pix(shape, c, y, x));
    }
    return out;
}

}  // namespace fscil
