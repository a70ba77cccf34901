#pragma once

#include <stdexcept>
#include <string>

namespace fgmhd {

// Error categories map 1:1 onto CLI exit codes (config=2, io=3, numeric=4).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// image file I/O
struct MalformedHeader : io_error {
    using io_error::io_error;
};
struct UnsupportedMaxval : io_error {
    using io_error::io_error;
};
struct TruncatedPayload : io_error {
    using io_error::io_error;
};
struct IoFailure : io_error {
    using io_error::io_error;
};

// synthesis
struct EmptyRatios : config_error {
    using config_error::config_error;
};
struct RatioOutOfRange : config_error {
    using config_error::config_error;
};
struct NonContractiveMap : config_error {
    using config_error::config_error;
};
struct UnsupportedKind : config_error {
    using config_error::config_error;
};

// estimators
struct DegenerateAbscissa : numeric_error {
    using numeric_error::numeric_error;
};
struct EmptySet : numeric_error {
    using numeric_error::numeric_error;
};
struct ImageTooSmall : config_error {
    using config_error::config_error;
};
struct ConstantImage : numeric_error {
    using numeric_error::numeric_error;
};
struct NonSquare : config_error {
    using config_error::config_error;
};
struct InsufficientIslands : numeric_error {
    using numeric_error::numeric_error;
};
struct TooSparse : numeric_error {
    using numeric_error::numeric_error;
};

// regressor
struct ShapeMismatch : config_error {
    using config_error::config_error;
};
struct EmptyDataset : config_error {
    using config_error::config_error;
};
struct VersionMismatch : io_error {
    using io_error::io_error;
};

// scheduler
struct NegativeLoss : numeric_error {
    using numeric_error::numeric_error;
};
struct SeriesTooShort : config_error {
    using config_error::config_error;
};

// cascade training
struct EmptyReferenceSet : config_error {
    using config_error::config_error;
};
struct EmptyFamily : config_error {
    using config_error::config_error;
};
struct EstimatorFailure : numeric_error {
    using numeric_error::numeric_error;
};

// sampling
struct AllSlotsExhausted : numeric_error {
    using numeric_error::numeric_error;
};

}  // namespace fgmhd
