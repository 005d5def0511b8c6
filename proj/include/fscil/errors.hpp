#pragma once

#include <stdexcept>
#include <string>

namespace fscil {

// One exception type per contract violation. Callers catch by name; the
// message carries the offending values.
struct InsufficientClasses : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IndexOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyTrainSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroNormVector : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RegistryMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LabelOutOfRegistry : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ClassifierNotExpanded : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyReports : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InconsistentSessionCounts : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidAxis : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonSquareInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Pipeline stage failure; the message starts with the stage tag.
struct StageFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fscil
