// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace scenegen {

struct VocabularyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ReferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AttributeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scenegen
