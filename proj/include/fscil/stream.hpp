#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fscil/data.hpp"

namespace fscil {

struct SplitConfig {
    int base_classes = 0;
    int incremental_sessions = 0;
    int way = 0;
    int shot = 0;
    std::uint64_t seed = 0;
};

struct Session {
    LabeledSet train;
    LabeledSet test;
};

// Ordered sessions with pairwise-disjoint class sets. Session 0 is the base
// session; sessions i>0 are way-by-shot.
struct SessionStream {
    std::vector<Session> sessions;
    int base_class_count = 0;
    int way = 0;
    int shot = 0;

    int num_sessions() const { return static_cast<int>(sessions.size()); }
    // Classes of sessions 0..session_id concatenated in session order.
    std::vector<int> classes_through(int session_id) const;
};

void validate(const SessionStream& stream);

// Splits a single source into the session stream. Class-to-session assignment
// is a seeded shuffle: first base_classes ids form the base session, then
// consecutive way-sized blocks. Each class's samples are partitioned into
// train/test by a seeded shuffle with `test_fraction` held out; incremental
// classes keep the first `shot` training samples.
SessionStream build_session_stream(const LabeledSet& source, const SplitConfig& cfg,
                                   double test_fraction = 0.5);

// Same protocol when the train/test partition is already fixed (benchmark
// layouts ship separate train and test sets).
SessionStream build_session_stream_presplit(const LabeledSet& train_source,
                                            const LabeledSet& test_source,
                                            const SplitConfig& cfg);

// Union of test sets of sessions 0..session_id, class registry in session order.
LabeledSet cumulative_test_set(const SessionStream& stream, int session_id);

// Isotropic Gaussian clusters with unit within-class variance; class means are
// drawn so that expected pairwise mean distance >= separation. dim must be a
// perfect square: samples are shaped (1, sqrt(dim), sqrt(dim)) so rotation
// augmentation stays meaningful.
LabeledSet synth_blob_source(int classes, int per_class, int dim, double separation,
                             std::uint64_t seed);

// Split-file schema (JSON, documented in README): per-session class id lists,
// optionally per-class train sample row indices into the train source.
SessionStream load_session_stream_from_split_file(const std::string& path,
                                                  const LabeledSet& train_source,
                                                  const LabeledSet& test_source,
                                                  const SplitConfig& cfg);

void save_split_file(const std::string& path, const SessionStream& stream);

}  // namespace fscil
