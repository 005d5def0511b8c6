#include "fscil/metrics.hpp"

#include <cmath>
#include <unordered_set>

namespace fscil {

std::string metric_to_string(MetricTag metric) {
    switch (metric) {
        case MetricTag::Cosine: return "cosine";
        case MetricTag::SqEuclid: return "sqeuclid";
        case MetricTag::Ensemble: return "ensemble";
    }
    throw InvalidConfig("metric_to_string: unknown tag");
}

MetricTag metric_from_string(const std::string& name) {
    if (name == "cosine") return MetricTag::Cosine;
    if (name == "sqeuclid") return MetricTag::SqEuclid;
    if (name == "ensemble") return MetricTag::Ensemble;
    throw InvalidConfig("unknown metric: " + name);
}

void validate(const WeightMatrix& w) {
    if (w.rows.rows() != static_cast<Eigen::Index>(w.class_registry.size()))
        throw ShapeMismatch("WeightMatrix: row count != registry length");
    std::unordered_set<int> seen;
    for (int c : w.class_registry)
        if (!seen.insert(c).second)
            throw DuplicateClass("WeightMatrix: duplicate class id " + std::to_string(c));
    if (!w.rows.allFinite()) throw NonFiniteLoss("WeightMatrix: non-finite row");
}

WeightMatrix concat(const WeightMatrix& a, const WeightMatrix& b) {
    if (a.num_classes() > 0 && b.num_classes() > 0 && a.rows.cols() != b.rows.cols())
        throw ShapeMismatch("concat(WeightMatrix): dim mismatch");
    WeightMatrix out;
    out.class_registry = a.class_registry;
    out.class_registry.insert(out.class_registry.end(), b.class_registry.begin(),
                              b.class_registry.end());
    const Eigen::Index cols = a.num_classes() > 0 ? a.rows.cols() : b.rows.cols();
    out.rows.resize(a.rows.rows() + b.rows.rows(), cols);
    out.rows.topRows(a.rows.rows()) = a.rows;
    out.rows.bottomRows(b.rows.rows()) = b.rows;
    validate(out);  // catches duplicate ids across the two registries
    return out;
}

WeightMatrix prototype(const Matrix& embeddings, const std::vector<int>& labels,
                       std::optional<std::vector<int>> class_order) {
    if (embeddings.rows() == 0) throw EmptyInput("prototype: no embeddings");
    if (embeddings.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ShapeMismatch("prototype: embeddings rows != labels size");

    std::vector<int> order;
    if (class_order) {
        order = *class_order;
    } else {
        std::unordered_set<int> seen;
        for (int y : labels)
            if (seen.insert(y).second) order.push_back(y);
    }
    auto idx = index_by_class(order);

    WeightMatrix w;
    w.class_registry = order;
    w.rows = Matrix::Zero(static_cast<Eigen::Index>(order.size()), embeddings.cols());
    std::vector<int> counts(order.size(), 0);
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        auto it = idx.find(labels[static_cast<size_t>(i)]);
        if (it == idx.end())
            throw UnknownClass("prototype: label not listed in class order");
        w.rows.row(it->second) += embeddings.row(i);
        ++counts[static_cast<size_t>(it->second)];
    }
    for (size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0)
            throw EmptyInput("prototype: class " + std::to_string(order[c]) +
                             " has no embeddings");
        w.rows.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
    }
    return w;
}

ScoreMatrix cosine_scores(const Matrix& emb, const WeightMatrix& w) {
    if (emb.cols() != w.rows.cols())
        throw ShapeMismatch("cosine_scores: dim mismatch");
    Vector en = emb.rowwise().norm();
    Vector wn = w.rows.rowwise().norm();
    for (Eigen::Index i = 0; i < en.size(); ++i)
        if (en(i) == 0.0)
            throw ZeroNormVector("cosine_scores: zero-norm embedding row " +
                                 std::to_string(i));
    for (Eigen::Index j = 0; j < wn.size(); ++j)
        if (wn(j) == 0.0)
            throw ZeroNormVector("cosine_scores: zero-norm weight row " +
                                 std::to_string(j));
    ScoreMatrix s;
    s.metric = MetricTag::Cosine;
    s.values = (emb * w.rows.transpose()).array().colwise() / en.array();
    s.values = s.values.array().rowwise() / wn.transpose().array();
    // rounding can push |v| marginally past 1; keep exact values otherwise
    s.values = s.values.cwiseMin(1.0).cwiseMax(-1.0);
    return s;
}

ScoreMatrix sqeuclid_scores(const Matrix& emb, const WeightMatrix& w) {
    if (emb.cols() != w.rows.cols())
        throw ShapeMismatch("sqeuclid_scores: dim mismatch");
    const double d = static_cast<double>(emb.cols());
    ScoreMatrix s;
    s.metric = MetricTag::SqEuclid;
    s.values.resize(emb.rows(), w.rows.rows());
    for (Eigen::Index i = 0; i < emb.rows(); ++i)
        for (Eigen::Index j = 0; j < w.rows.rows(); ++j)
            s.values(i, j) = -(emb.row(i) - w.rows.row(j)).squaredNorm() / d;
    return s;
}

ProbMatrix scaled_softmax(const ScoreMatrix& scores, double s) {
    if (s <= 0.0) throw InvalidConfig("scaled_softmax: scale must be > 0");
    if (!scores.values.allFinite())
        throw NonFiniteLoss("scaled_softmax: non-finite scores");
    Matrix z = s * scores.values;
    ProbMatrix p;
    p.values.resize(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double m = z.row(i).maxCoeff();
        Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
        p.values.row(i) = e / e.sum();
    }
    return p;
}

double cross_entropy(const ProbMatrix& probs, const std::vector<int>& label_indices) {
    if (probs.values.rows() != static_cast<Eigen::Index>(label_indices.size()))
        throw ShapeMismatch("cross_entropy: rows != labels");
    if (probs.values.rows() == 0) throw EmptyInput("cross_entropy: empty batch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.values.rows(); ++i) {
        int y = label_indices[static_cast<size_t>(i)];
        if (y < 0 || y >= probs.values.cols())
            throw LabelOutOfRegistry("cross_entropy: label index " + std::to_string(y));
        total += -std::log(probs.values(i, y));
    }
    return total / static_cast<double>(probs.values.rows());
}

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if (row.size() == 0) throw EmptyInput("argmax_row: empty row");
    int best = 0;
    for (int j = 1; j < row.size(); ++j)
        if (row(j) > row(best)) best = j;
    return best;
}

}  // namespace fscil
