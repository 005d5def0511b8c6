#include "fscil/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "fscil/rng.hpp"
#include "json.hpp"

namespace fscil {
namespace {

// Per-class row pools in registry order.
std::vector<std::vector<int>> class_pools(const LabeledSet& set) {
    auto idx = index_by_class(set.class_ids);
    std::vector<std::vector<int>> pools(set.class_ids.size());
    for (int r = 0; r < set.size(); ++r)
        pools[static_cast<size_t>(idx.at(set.labels[r]))].push_back(r);
    return pools;
}

void check_split_feasible(const SplitConfig& cfg, int total_classes) {
    if (cfg.base_classes < 0 || cfg.incremental_sessions < 0 || cfg.way < 0 ||
        cfg.shot < 0)
        throw InvalidConfig("SplitConfig fields must be non-negative");
    if (cfg.incremental_sessions > 0 && (cfg.way <= 0 || cfg.shot <= 0))
        throw InvalidConfig("incremental sessions require way > 0 and shot > 0");
    long needed = static_cast<long>(cfg.base_classes) +
                  static_cast<long>(cfg.incremental_sessions) * cfg.way;
    if (needed > total_classes)
        throw InsufficientClasses("need " + std::to_string(needed) + " classes, source has " +
                                  std::to_string(total_classes));
}

// Session class lists: seeded shuffle, base block, then way-sized blocks.
std::vector<std::vector<int>> assign_classes(const std::vector<int>& all_classes,
                                             const SplitConfig& cfg) {
    std::vector<int> shuffled = all_classes;
    Rng rng = make_rng(cfg.seed, "class-assignment");
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<std::vector<int>> per_session;
    per_session.emplace_back(shuffled.begin(), shuffled.begin() + cfg.base_classes);
    int pos = cfg.base_classes;
    for (int s = 0; s < cfg.incremental_sessions; ++s) {
        per_session.emplace_back(shuffled.begin() + pos, shuffled.begin() + pos + cfg.way);
        pos += cfg.way;
    }
    return per_session;
}

SessionStream assemble(const LabeledSet& train_source, const LabeledSet& test_source,
                       const SplitConfig& cfg,
                       const std::vector<std::vector<int>>& session_classes,
                       const std::vector<std::vector<int>>* train_rows_per_session) {
    SessionStream stream;
    stream.base_class_count = cfg.base_classes;
    stream.way = cfg.way;
    stream.shot = cfg.shot;

    auto train_pools = class_pools(train_source);
    auto train_idx = index_by_class(train_source.class_ids);
    auto test_pools = class_pools(test_source);
    auto test_idx = index_by_class(test_source.class_ids);

    for (size_t s = 0; s < session_classes.size(); ++s) {
        const auto& classes = session_classes[s];
        const bool explicit_rows = train_rows_per_session != nullptr &&
                                   s < train_rows_per_session->size() &&
                                   !(*train_rows_per_session)[s].empty();
        std::vector<int> train_rows, test_rows;
        for (int c : classes) {
            auto ti = train_idx.find(c);
            if (ti == train_idx.end())
                throw UnknownClass("class " + std::to_string(c) + " not in train source");
            std::vector<int> pool = train_pools[static_cast<size_t>(ti->second)];
            if (s > 0) {
                if (static_cast<int>(pool.size()) < cfg.shot)
                    throw InsufficientSamples("class " + std::to_string(c) + " has " +
                                              std::to_string(pool.size()) +
                                              " train samples, shot=" +
                                              std::to_string(cfg.shot));
                // first `shot` after a seeded per-class shuffle
                Rng rng = make_rng(cfg.seed, "shot-draw-" + std::to_string(c));
                std::shuffle(pool.begin(), pool.end(), rng);
                pool.resize(static_cast<size_t>(cfg.shot));
            } else if (cfg.incremental_sessions > 0 &&
                       static_cast<int>(pool.size()) < cfg.shot * cfg.way) {
                throw InsufficientSamples("base class " + std::to_string(c) +
                                          " has fewer than shot*way train samples");
            }
            if (!explicit_rows)
                train_rows.insert(train_rows.end(), pool.begin(), pool.end());
            auto te = test_idx.find(c);
            if (te == test_idx.end())
                throw UnknownClass("class " + std::to_string(c) + " not in test source");
            const auto& tpool = test_pools[static_cast<size_t>(te->second)];
            test_rows.insert(test_rows.end(), tpool.begin(), tpool.end());
        }
        if (explicit_rows) train_rows = (*train_rows_per_session)[s];
        Session session;
        session.train = subset(train_source, train_rows, classes);
        session.test = subset(test_source, test_rows, classes);
        stream.sessions.push_back(std::move(session));
    }
    validate(stream);
    return stream;
}

}  // namespace

std::vector<int> SessionStream::classes_through(int session_id) const {
    if (session_id < 0 || session_id >= num_sessions())
        throw IndexOutOfRange("session id " + std::to_string(session_id));
    std::vector<int> out;
    for (int s = 0; s <= session_id; ++s)
        out.insert(out.end(), sessions[static_cast<size_t>(s)].train.class_ids.begin(),
                   sessions[static_cast<size_t>(s)].train.class_ids.end());
    return out;
}

void validate(const SessionStream& stream) {
    if (stream.sessions.empty()) throw EmptyInput("SessionStream: no sessions");
    std::unordered_set<int> seen;
    for (const auto& session : stream.sessions) {
        validate(session.train);
        validate(session.test);
        if (session.train.class_ids != session.test.class_ids)
            throw RegistryMismatch("session train/test class sets differ");
        for (int c : session.train.class_ids)
            if (!seen.insert(c).second)
                throw DuplicateClass("class " + std::to_string(c) +
                                     " appears in more than one session");
    }
    if (stream.sessions.size() > 1) {
        const auto& base = stream.sessions[0].train;
        for (int c : base.class_ids)
            if (static_cast<int>(rows_of_class(base, c).size()) < stream.shot * stream.way)
                throw InvalidConfig("base class must have >= shot*way train samples");
    }
    for (size_t s = 1; s < stream.sessions.size(); ++s) {
        const auto& train = stream.sessions[s].train;
        if (train.num_classes() != stream.way)
            throw InvalidConfig("incremental session must have exactly `way` classes");
        for (int c : train.class_ids)
            if (static_cast<int>(rows_of_class(train, c).size()) != stream.shot)
                throw InvalidConfig("incremental class must have exactly `shot` samples");
    }
}

SessionStream build_session_stream(const LabeledSet& source, const SplitConfig& cfg,
                                   double test_fraction) {
    validate(source);
    check_split_feasible(cfg, source.num_classes());
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw InvalidConfig("test_fraction must be in (0, 1)");

    // Seeded per-class train/test partition of the single source.
    auto pools = class_pools(source);
    std::vector<int> train_rows, test_rows;
    for (size_t c = 0; c < pools.size(); ++c) {
        std::vector<int> pool = pools[c];
        Rng rng = make_rng(cfg.seed, "holdout-" + std::to_string(source.class_ids[c]));
        std::shuffle(pool.begin(), pool.end(), rng);
        auto n_test = static_cast<size_t>(
            std::floor(test_fraction * static_cast<double>(pool.size())));
        n_test = std::min(std::max<size_t>(n_test, 1), pool.size() - 1);
        test_rows.insert(test_rows.end(), pool.begin(), pool.begin() + static_cast<long>(n_test));
        train_rows.insert(train_rows.end(), pool.begin() + static_cast<long>(n_test), pool.end());
    }
    LabeledSet train_source = subset(source, train_rows, source.class_ids);
    LabeledSet test_source = subset(source, test_rows, source.class_ids);
    return build_session_stream_presplit(train_source, test_source, cfg);
}

SessionStream build_session_stream_presplit(const LabeledSet& train_source,
                                            const LabeledSet& test_source,
                                            const SplitConfig& cfg) {
    validate(train_source);
    validate(test_source);
    if (train_source.class_ids != test_source.class_ids)
        throw RegistryMismatch("train/test sources list different classes");
    check_split_feasible(cfg, train_source.num_classes());
    auto session_classes = assign_classes(train_source.class_ids, cfg);
    return assemble(train_source, test_source, cfg, session_classes, nullptr);
}

LabeledSet cumulative_test_set(const SessionStream& stream, int session_id) {
    if (session_id < 0 || session_id >= stream.num_sessions())
        throw IndexOutOfRange("cumulative_test_set: session " + std::to_string(session_id));
    LabeledSet out = stream.sessions[0].test;
    for (int s = 1; s <= session_id; ++s)
        out = concat(out, stream.sessions[static_cast<size_t>(s)].test);
    return out;
}

LabeledSet synth_blob_source(int classes, int per_class, int dim, double separation,
                             std::uint64_t seed) {
    if (classes < 2) throw InsufficientClasses("synth_blob_source: classes >= 2");
    if (per_class < 2) throw InsufficientSamples("synth_blob_source: per_class >= 2");
    if (separation <= 0.0) throw InvalidConfig("synth_blob_source: separation > 0");
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (side * side != dim)
        throw InvalidConfig("synth_blob_source: dim must be a perfect square");

    Rng rng = make_rng(seed, "blobs");
    std::normal_distribution<double> gauss(0.0, 1.0);
    // mean coordinates ~ N(0, separation^2/dim): E|m_i - m_j|^2 = 2*separation^2,
    // so expected mean distance clears `separation` for any dim >= 2
    const double mean_sigma = separation / std::sqrt(static_cast<double>(dim));
    Matrix means(classes, dim);
    for (int c = 0; c < classes; ++c)
        for (int k = 0; k < dim; ++k) means(c, k) = mean_sigma * gauss(rng);

    Matrix inputs(classes * per_class, dim);
    std::vector<int> labels;
    labels.reserve(static_cast<size_t>(classes * per_class));
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            for (int k = 0; k < dim; ++k)
                inputs(c * per_class + i, k) = means(c, k) + gauss(rng);
            labels.push_back(c);
        }
    }
    return make_labeled_set(std::move(inputs), std::move(labels),
                            ImageShape{1, side, side});
}

SessionStream load_session_stream_from_split_file(const std::string& path,
                                                  const LabeledSet& train_source,
                                                  const LabeledSet& test_source,
                                                  const SplitConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("sessions") || !j["sessions"].is_array())
        throw InvalidConfig("split file: missing sessions array");

    std::vector<std::vector<int>> session_classes;
    std::vector<std::vector<int>> train_rows;
    for (const auto& session : j["sessions"]) {
        session_classes.push_back(session.at("classes").get<std::vector<int>>());
        std::vector<int> rows;
        if (session.contains("train_rows"))
            rows = session["train_rows"].get<std::vector<int>>();
        train_rows.push_back(std::move(rows));
    }
    SplitConfig resolved = cfg;
    resolved.base_classes = static_cast<int>(session_classes.at(0).size());
    resolved.incremental_sessions = static_cast<int>(session_classes.size()) - 1;
    if (resolved.incremental_sessions > 0)
        resolved.way = static_cast<int>(session_classes.at(1).size());
    return assemble(train_source, test_source, resolved, session_classes, &train_rows);
}

void save_split_file(const std::string& path, const SessionStream& stream) {
    nlohmann::json j;
    j["sessions"] = nlohmann::json::array();
    for (const auto& session : stream.sessions) {
        nlohmann::json s;
        s["classes"] = session.train.class_ids;
        j["sessions"].push_back(std::move(s));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write split file " + path);
    out << j.dump(2) << "\n";
}

}  // namespace fscil
