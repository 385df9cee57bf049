// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_ERRORS_HPP
#define LCUMINI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lcumini {

/// Incompatible tensor or image shapes at an op boundary.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller violated an operation precondition (non-scalar loss, bad axis, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A function under evaluation produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradients during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset does not match the training stage (N-ref sample in stage 1, stage 2 without init).
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptCheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcumini

#endif  // LCUMINI_ERRORS_HPP
