#include "fscil/data.hpp"

#include <algorithm>
#include <unordered_set>

namespace fscil {

void validate(const LabeledSet& set) {
    if (set.inputs.rows() != static_cast<Eigen::Index>(set.labels.size()))
        throw ShapeMismatch("LabeledSet: inputs rows != labels size");
    if (set.inputs.cols() != set.shape.size() && set.size() > 0)
        throw ShapeMismatch("LabeledSet: inputs cols != shape size");
    std::unordered_set<int> seen;
    for (int c : set.class_ids) {
        if (!seen.insert(c).second)
            throw DuplicateClass("LabeledSet: duplicate class id " + std::to_string(c));
    }
    for (int y : set.labels) {
        if (!seen.count(y))
            throw UnknownClass("LabeledSet: label " + std::to_string(y) +
                               " missing from class_ids");
    }
}

LabeledSet make_labeled_set(Matrix inputs, std::vector<int> labels, ImageShape shape,
                            std::optional<std::vector<int>> class_order) {
    LabeledSet set;
    set.inputs = std::move(inputs);
    set.labels = std::move(labels);
    set.shape = shape;
    if (class_order) {
        set.class_ids = std::move(*class_order);
    } else {
        std::unordered_set<int> seen;
        for (int y : set.labels)
            if (seen.insert(y).second) set.class_ids.push_back(y);
    }
    validate(set);
    return set;
}

LabeledSet subset(const LabeledSet& set, const std::vector<int>& rows,
                  std::optional<std::vector<int>> class_order) {
    Matrix inputs(static_cast<Eigen::Index>(rows.size()), set.inputs.cols());
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        int r = rows[i];
        if (r < 0 || r >= set.size())
            throw IndexOutOfRange("subset: row " + std::to_string(r));
        inputs.row(static_cast<Eigen::Index>(i)) = set.inputs.row(r);
        labels.push_back(set.labels[r]);
    }
    return make_labeled_set(std::move(inputs), std::move(labels), set.shape,
                            std::move(class_order));
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (!(a.shape == b.shape)) throw ShapeMismatch("concat: shapes differ");
    Matrix inputs(a.inputs.rows() + b.inputs.rows(), a.inputs.cols());
    inputs << a.inputs, b.inputs;
    std::vector<int> labels = a.labels;
    labels.insert(labels.end(), b.labels.begin(), b.labels.end());
    std::vector<int> ids = a.class_ids;
    ids.insert(ids.end(), b.class_ids.begin(), b.class_ids.end());
    return make_labeled_set(std::move(inputs), std::move(labels), a.shape, std::move(ids));
}

std::unordered_map<int, int> index_by_class(const std::vector<int>& class_ids) {
    std::unordered_map<int, int> m;
    m.reserve(class_ids.size());
    for (size_t i = 0; i < class_ids.size(); ++i) {
        if (!m.emplace(class_ids[i], static_cast<int>(i)).second)
            throw DuplicateClass("registry has duplicate class id " +
                                 std::to_string(class_ids[i]));
    }
    return m;
}

std::vector<int> rows_of_class(const LabeledSet& set, int class_id) {
    std::vector<int> rows;
    for (int i = 0; i < set.size(); ++i)
        if (set.labels[i] == class_id) rows.push_back(i);
    return rows;
}

std::vector<int> labels_as_indices(const std::vector<int>& labels,
                                   const std::vector<int>& registry) {
    auto idx = index_by_class(registry);
    std::vector<int> out;
    out.reserve(labels.size());
    for (int y : labels) {
        auto it = idx.find(y);
        if (it == idx.end())
            throw LabelOutOfRegistry("label " + std::to_string(y) + " not in registry");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace fscil
