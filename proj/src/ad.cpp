#include "fscil/ad.hpp"

#include <cmath>

namespace fscil::ad {

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::leaf(Matrix value) { return push(std::move(value), record_, {}); }

const Matrix& Tape::grad(Var v) { return grad_ref(v); }

Matrix& Tape::grad_ref(Var v) {
    Node& n = node(v);
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    grad_ref(v) += g;
}

Var Tape::add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeMismatch("ad::add: shape mismatch");
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Matrix out = value(a) + value(b);
    return push(std::move(out), rg, [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::sub(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeMismatch("ad::sub: shape mismatch");
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Matrix out = value(a) - value(b);
    return push(std::move(out), rg, [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var Tape::scale(Var a, double s) {
    bool rg = record_ && requires_grad(a);
    Matrix out = s * value(a);
    return push(std::move(out), rg, [a, s, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        t.accumulate(a, s * t.node(self).grad);
    });
}

Var Tape::mul(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeMismatch("ad::mul: shape mismatch");
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Matrix out = value(a).cwiseProduct(value(b));
    return push(std::move(out), rg, [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        t.accumulate(a, g.cwiseProduct(t.value(b)));
        t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
}

Var Tape::relu(Var a) {
    bool rg = record_ && requires_grad(a);
    Matrix out = value(a).cwiseMax(0.0);
    return push(std::move(out), rg, [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        Matrix mask = (t.value(a).array() > 0.0).cast<double>();
        t.accumulate(a, g.cwiseProduct(mask));
    });
}

Var Tape::concat_rows(Var a, Var b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows() > 0 && vb.rows() > 0 && va.cols() != vb.cols())
        throw ShapeMismatch("ad::concat_rows: column mismatch");
    Eigen::Index cols = va.rows() > 0 ? va.cols() : vb.cols();
    Matrix out(va.rows() + vb.rows(), cols);
    if (va.rows() > 0) out.topRows(va.rows()) = va;
    if (vb.rows() > 0) out.bottomRows(vb.rows()) = vb;
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Eigen::Index na = va.rows();
    return push(std::move(out), rg,
                [a, b, na, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    if (na > 0) t.accumulate(a, g.topRows(na));
                    if (g.rows() - na > 0) t.accumulate(b, g.bottomRows(g.rows() - na));
                });
}

Var Tape::add_row_broadcast(Var a, Var bias) {
    if (value(bias).rows() != 1 || value(bias).cols() != value(a).cols())
        throw ShapeMismatch("ad::add_row_broadcast: bias must be (1, cols)");
    bool rg = record_ && (requires_grad(a) || requires_grad(bias));
    Matrix out = value(a).rowwise() + value(bias).row(0);
    return push(std::move(out), rg,
                [a, bias, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    t.accumulate(a, g);
                    t.accumulate(bias, g.colwise().sum());
                });
}

Var Tape::matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows())
        throw ShapeMismatch("ad::matmul: inner dims differ");
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Matrix out = value(a) * value(b);
    return push(std::move(out), rg, [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        t.accumulate(a, g * t.value(b).transpose());
        t.accumulate(b, t.value(a).transpose() * g);
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    if (value(a).cols() != value(b).cols())
        throw ShapeMismatch("ad::matmul_nt: dims differ");
    bool rg = record_ && (requires_grad(a) || requires_grad(b));
    Matrix out = value(a) * value(b).transpose();
    return push(std::move(out), rg, [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Matrix& g = t.node(self).grad;
        t.accumulate(a, g * t.value(b));
        t.accumulate(b, g.transpose() * t.value(a));
    });
}

Var Tape::row_l2_normalize(Var a) {
    const Matrix& x = value(a);
    Vector norms = x.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i)
        if (norms(i) == 0.0)
            throw ZeroNormVector("row_l2_normalize: zero-norm row " + std::to_string(i));
    Matrix out = x.array().colwise() / norms.array();
    bool rg = record_ && requires_grad(a);
    return push(std::move(out), rg,
                [a, norms, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    // y = x/|x|; dx_i = (g_i - y_i (g_i . y_i)) / |x_i|
                    const Matrix& g = t.node(self).grad;
                    const Matrix& y = t.value(self);
                    Matrix dx(g.rows(), g.cols());
                    for (Eigen::Index i = 0; i < g.rows(); ++i) {
                        double dot = g.row(i).dot(y.row(i));
                        dx.row(i) = (g.row(i) - dot * y.row(i)) / norms(i);
                    }
                    t.accumulate(a, dx);
                });
}

Var Tape::group_mean_rows(Var a, const std::vector<int>& groups, int n_groups) {
    const Matrix& x = value(a);
    if (x.rows() != static_cast<Eigen::Index>(groups.size()))
        throw ShapeMismatch("ad::group_mean_rows: groups size != rows");
    if (n_groups <= 0) throw EmptyInput("ad::group_mean_rows: n_groups must be > 0");
    Matrix out = Matrix::Zero(n_groups, x.cols());
    std::vector<double> counts(static_cast<size_t>(n_groups), 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int gidx = groups[static_cast<size_t>(i)];
        if (gidx < 0 || gidx >= n_groups)
            throw IndexOutOfRange("ad::group_mean_rows: group index out of range");
        out.row(gidx) += x.row(i);
        counts[static_cast<size_t>(gidx)] += 1.0;
    }
    for (int gidx = 0; gidx < n_groups; ++gidx) {
        if (counts[static_cast<size_t>(gidx)] == 0.0)
            throw EmptyInput("ad::group_mean_rows: empty group " + std::to_string(gidx));
        out.row(gidx) /= counts[static_cast<size_t>(gidx)];
    }
    bool rg = record_ && requires_grad(a);
    return push(std::move(out), rg,
                [a, groups, counts, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    Matrix dx(static_cast<Eigen::Index>(groups.size()), g.cols());
                    for (Eigen::Index i = 0; i < dx.rows(); ++i) {
                        int gidx = groups[static_cast<size_t>(i)];
                        dx.row(i) = g.row(gidx) / counts[static_cast<size_t>(gidx)];
                    }
                    t.accumulate(a, dx);
                });
}

Var Tape::sqeuclid_scores(Var emb, Var w) {
    const Matrix& e = value(emb);
    const Matrix& wm = value(w);
    if (e.cols() != wm.cols()) throw ShapeMismatch("ad::sqeuclid_scores: dim mismatch");
    const double d = static_cast<double>(e.cols());
    Matrix out(e.rows(), wm.rows());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < wm.rows(); ++j)
            out(i, j) = -(e.row(i) - wm.row(j)).squaredNorm() / d;
    bool rg = record_ && (requires_grad(emb) || requires_grad(w));
    return push(std::move(out), rg,
                [emb, w, d, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    const Matrix& e = t.value(emb);
                    const Matrix& wm = t.value(w);
                    Matrix de = Matrix::Zero(e.rows(), e.cols());
                    Matrix dw = Matrix::Zero(wm.rows(), wm.cols());
                    for (Eigen::Index i = 0; i < e.rows(); ++i) {
                        for (Eigen::Index j = 0; j < wm.rows(); ++j) {
                            // dS_ij/de_i = -2 (e_i - w_j) / d
                            Eigen::RowVectorXd diff = (e.row(i) - wm.row(j)) * (2.0 / d);
                            de.row(i) -= g(i, j) * diff;
                            dw.row(j) += g(i, j) * diff;
                        }
                    }
                    t.accumulate(emb, de);
                    t.accumulate(w, dw);
                });
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const Matrix& z = value(logits);
    if (z.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ShapeMismatch("ad::softmax_cross_entropy: rows != labels");
    if (z.rows() == 0) throw EmptyInput("ad::softmax_cross_entropy: empty batch");
    Matrix probs(z.rows(), z.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        int y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= z.cols())
            throw LabelOutOfRegistry("ad::softmax_cross_entropy: label out of range");
        double m = z.row(i).maxCoeff();
        Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
        double sum = e.sum();
        probs.row(i) = e / sum;
        total += std::log(sum) + m - z(i, y);
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(z.rows());
    bool rg = record_ && requires_grad(logits);
    return push(std::move(out), rg,
                [logits, labels, probs, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    double gs = t.node(self).grad(0, 0);
                    Matrix dz = probs;
                    for (Eigen::Index i = 0; i < dz.rows(); ++i)
                        dz(i, labels[static_cast<size_t>(i)]) -= 1.0;
                    dz *= gs / static_cast<double>(dz.rows());
                    t.accumulate(logits, dz);
                });
}

namespace {

// col(row=(c*k+ky)*k+kx, col=oy*ow+ox) = x(c, oy*s-p+ky, ox*s-p+kx)
Matrix im2col(const Eigen::Ref<const Eigen::RowVectorXd>& sample,
              const Tape::Conv2dSpec& sp) {
    const int oh = sp.out_h(), ow = sp.out_w(), k = sp.kernel;
    Matrix col = Matrix::Zero(sp.in_c * k * k, oh * ow);
    for (int c = 0; c < sp.in_c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * sp.stride - sp.pad + ky;
                    if (iy < 0 || iy >= sp.in_h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * sp.stride - sp.pad + kx;
                        if (ix < 0 || ix >= sp.in_w) continue;
                        col(row, oy * ow + ox) = sample((c * sp.in_h + iy) * sp.in_w + ix);
                    }
                }
            }
    return col;
}

void col2im_add(Eigen::RowVectorXd& dst, const Matrix& dcol,
                const Tape::Conv2dSpec& sp) {
    const int oh = sp.out_h(), ow = sp.out_w(), k = sp.kernel;
    for (int c = 0; c < sp.in_c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * sp.stride - sp.pad + ky;
                    if (iy < 0 || iy >= sp.in_h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * sp.stride - sp.pad + kx;
                        if (ix < 0 || ix >= sp.in_w) continue;
                        dst((c * sp.in_h + iy) * sp.in_w + ix) += dcol(row, oy * ow + ox);
                    }
                }
            }
}

}  // namespace

Var Tape::conv2d(Var x, Var kernel, Var bias, const Conv2dSpec& spec) {
    const Matrix& xv = value(x);
    const Matrix& kv = value(kernel);
    const Matrix& bv = value(bias);
    if (xv.cols() != spec.in_c * spec.in_h * spec.in_w)
        throw ShapeMismatch("ad::conv2d: input cols != c*h*w");
    if (kv.rows() != spec.out_c || kv.cols() != spec.in_c * spec.kernel * spec.kernel)
        throw ShapeMismatch("ad::conv2d: kernel shape");
    if (bv.rows() != 1 || bv.cols() != spec.out_c)
        throw ShapeMismatch("ad::conv2d: bias shape");
    const int oh = spec.out_h(), ow = spec.out_w();
    Matrix out(xv.rows(), spec.out_c * oh * ow);
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
        Matrix col = im2col(xv.row(i), spec);
        Matrix y = kv * col;  // (out_c, oh*ow)
        y.colwise() += bv.row(0).transpose();
        for (int oc = 0; oc < spec.out_c; ++oc)
            for (int p = 0; p < oh * ow; ++p) out(i, oc * oh * ow + p) = y(oc, p);
    }
    bool rg = record_ && (requires_grad(x) || requires_grad(kernel) || requires_grad(bias));
    return push(std::move(out), rg,
                [x, kernel, bias, spec, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    const Matrix& xv = t.value(x);
                    const Matrix& kv = t.value(kernel);
                    const int oh = spec.out_h(), ow = spec.out_w();
                    Matrix dk = Matrix::Zero(kv.rows(), kv.cols());
                    Matrix db = Matrix::Zero(1, spec.out_c);
                    Matrix dx = Matrix::Zero(xv.rows(), xv.cols());
                    Matrix gy(spec.out_c, oh * ow);
                    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
                        for (int oc = 0; oc < spec.out_c; ++oc)
                            for (int p = 0; p < oh * ow; ++p)
                                gy(oc, p) = g(i, oc * oh * ow + p);
                        Matrix col = im2col(xv.row(i), spec);
                        dk += gy * col.transpose();
                        db.row(0) += gy.rowwise().sum().transpose();
                        Matrix dcol = kv.transpose() * gy;
                        Eigen::RowVectorXd dxi = Eigen::RowVectorXd::Zero(xv.cols());
                        col2im_add(dxi, dcol, spec);
                        dx.row(i) += dxi;
                    }
                    t.accumulate(x, dx);
                    t.accumulate(kernel, dk);
                    t.accumulate(bias, db);
                });
}

Var Tape::avgpool2x2(Var x, int c, int h, int w) {
    const Matrix& xv = value(x);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeMismatch("ad::avgpool2x2: h and w must be even");
    if (xv.cols() != c * h * w) throw ShapeMismatch("ad::avgpool2x2: input cols");
    const int oh = h / 2, ow = w / 2;
    Matrix out = Matrix::Zero(xv.rows(), c * oh * ow);
    for (Eigen::Index i = 0; i < xv.rows(); ++i)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double sum = 0.0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            sum += xv(i, (ch * h + 2 * oy + dy) * w + 2 * ox + dx);
                    out(i, (ch * oh + oy) * ow + ox) = sum / 4.0;
                }
    bool rg = record_ && requires_grad(x);
    return push(std::move(out), rg,
                [x, c, h, w, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    const int oh = h / 2, ow = w / 2;
                    Matrix dx = Matrix::Zero(g.rows(), c * h * w);
                    for (Eigen::Index i = 0; i < g.rows(); ++i)
                        for (int ch = 0; ch < c; ++ch)
                            for (int oy = 0; oy < oh; ++oy)
                                for (int ox = 0; ox < ow; ++ox) {
                                    double gv = g(i, (ch * oh + oy) * ow + ox) / 4.0;
                                    for (int dy = 0; dy < 2; ++dy)
                                        for (int dxp = 0; dxp < 2; ++dxp)
                                            dx(i, (ch * h + 2 * oy + dy) * w + 2 * ox + dxp) += gv;
                                }
                    t.accumulate(x, dx);
                });
}

Var Tape::global_avg_pool(Var x, int c, int h, int w) {
    const Matrix& xv = value(x);
    if (xv.cols() != c * h * w) throw ShapeMismatch("ad::global_avg_pool: input cols");
    const int hw = h * w;
    Matrix out(xv.rows(), c);
    for (Eigen::Index i = 0; i < xv.rows(); ++i)
        for (int ch = 0; ch < c; ++ch)
            out(i, ch) = xv.row(i).segment(ch * hw, hw).mean();
    bool rg = record_ && requires_grad(x);
    return push(std::move(out), rg,
                [x, c, hw, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    Matrix dx(g.rows(), c * hw);
                    for (Eigen::Index i = 0; i < g.rows(); ++i)
                        for (int ch = 0; ch < c; ++ch)
                            dx.row(i).segment(ch * hw, hw).setConstant(g(i, ch) / hw);
                    t.accumulate(x, dx);
                });
}

Var Tape::batchnorm2d(Var x, Var gamma, Var beta, Matrix& running_mean,
                      Matrix& running_var, int c, int h, int w, bool training,
                      double momentum, double eps) {
    const Matrix& xv = value(x);
    const int hw = h * w;
    if (xv.cols() != c * hw) throw ShapeMismatch("ad::batchnorm2d: input cols");
    if (value(gamma).cols() != c || value(beta).cols() != c)
        throw ShapeMismatch("ad::batchnorm2d: gamma/beta must be (1, c)");
    const double m = static_cast<double>(xv.rows() * hw);

    Eigen::RowVectorXd mu(c), var(c);
    if (training) {
        if (xv.rows() == 0) throw EmptyInput("ad::batchnorm2d: empty batch");
        for (int ch = 0; ch < c; ++ch) {
            double s = 0.0, s2 = 0.0;
            for (Eigen::Index i = 0; i < xv.rows(); ++i) {
                auto seg = xv.row(i).segment(ch * hw, hw);
                s += seg.sum();
                s2 += seg.squaredNorm();
            }
            mu(ch) = s / m;
            var(ch) = s2 / m - mu(ch) * mu(ch);
        }
        double unbias = m > 1.0 ? m / (m - 1.0) : 1.0;
        running_mean = (1.0 - momentum) * running_mean + momentum * mu.matrix();
        running_var = (1.0 - momentum) * running_var + momentum * (unbias * var).matrix();
    } else {
        mu = running_mean.row(0);
        var = running_var.row(0);
    }

    Matrix xhat(xv.rows(), xv.cols());
    Matrix out(xv.rows(), xv.cols());
    const Matrix& gv = value(gamma);
    const Matrix& bv = value(beta);
    for (int ch = 0; ch < c; ++ch) {
        double inv = 1.0 / std::sqrt(var(ch) + eps);
        for (Eigen::Index i = 0; i < xv.rows(); ++i) {
            auto seg = xv.row(i).segment(ch * hw, hw);
            xhat.row(i).segment(ch * hw, hw) = (seg.array() - mu(ch)) * inv;
            out.row(i).segment(ch * hw, hw) =
                xhat.row(i).segment(ch * hw, hw) * gv(0, ch) + Eigen::RowVectorXd::Constant(hw, bv(0, ch));
        }
    }
    bool rg = record_ && (requires_grad(x) || requires_grad(gamma) || requires_grad(beta));
    return push(std::move(out), rg,
                [x, gamma, beta, xhat, var, c, hw, m, training, eps,
                 self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
                    const Matrix& g = t.node(self).grad;
                    const Matrix& gv = t.value(gamma);
                    Matrix dgamma = Matrix::Zero(1, c);
                    Matrix dbeta = Matrix::Zero(1, c);
                    Matrix dx = Matrix::Zero(g.rows(), g.cols());
                    for (int ch = 0; ch < c; ++ch) {
                        double inv = 1.0 / std::sqrt(var(ch) + eps);
                        double sum_g = 0.0, sum_gx = 0.0;
                        for (Eigen::Index i = 0; i < g.rows(); ++i) {
                            auto gseg = g.row(i).segment(ch * hw, hw);
                            auto xseg = xhat.row(i).segment(ch * hw, hw);
                            sum_g += gseg.sum();
                            sum_gx += gseg.dot(xseg);
                        }
                        dbeta(0, ch) = sum_g;
                        dgamma(0, ch) = sum_gx;
                        for (Eigen::Index i = 0; i < g.rows(); ++i) {
                            auto gseg = g.row(i).segment(ch * hw, hw);
                            auto xseg = xhat.row(i).segment(ch * hw, hw);
                            if (training) {
                                // dx = gamma*inv * (g - mean(g) - xhat*mean(g*xhat))
                                dx.row(i).segment(ch * hw, hw) =
                                    gv(0, ch) * inv *
                                    (gseg.array() - sum_g / m - xseg.array() * (sum_gx / m));
                            } else {
                                dx.row(i).segment(ch * hw, hw) = gv(0, ch) * inv * gseg.array();
                            }
                        }
                    }
                    t.accumulate(x, dx);
                    t.accumulate(gamma, dgamma);
                    t.accumulate(beta, dbeta);
                });
}

void Tape::backward(Var root) {
    if (!record_) throw InvalidConfig("Tape::backward: tape not recording");
    Node& r = node(root);
    if (r.value.size() != 1) throw ShapeMismatch("Tape::backward: root must be scalar");
    if (!r.requires_grad) return;
    grad_ref(root).setConstant(1.0);
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.requires_grad && n.grad.size() != 0 && n.backprop) n.backprop(*this);
    }
}

}  // namespace fscil::ad
