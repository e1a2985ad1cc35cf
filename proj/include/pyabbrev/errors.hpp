// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pyab {

// Bad input data: malformed files, failed lookups, inconsistent records.
// Surfaces as exit code 3 in the CLI.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, divergence, numeric breakdown. Exit code 4 in the CLI.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A character has no pinyin reading in the active table.
class MissingReadingError : public DataError {
public:
  explicit MissingReadingError(char32_t codepoint);
  char32_t codepoint() const noexcept { return codepoint_; }

private:
  char32_t codepoint_;
};

// Checkpoint load failures, kept distinct so callers can tell them apart.
class CheckpointFormatError : public DataError {
public:
  using DataError::DataError;
};
class CheckpointVersionError : public CheckpointFormatError {
public:
  using CheckpointFormatError::CheckpointFormatError;
};
class CheckpointTruncatedError : public CheckpointFormatError {
public:
  using CheckpointFormatError::CheckpointFormatError;
};
class CheckpointChecksumError : public CheckpointFormatError {
public:
  using CheckpointFormatError::CheckpointFormatError;
};

// Decoding found no feasible candidate for a span (hard filter exhausted).
class NoCandidateError : public DataError {
public:
  NoCandidateError(int span_index, int position);
  int span_index() const noexcept { return span_index_; }
  int position() const noexcept { return position_; }

private:
  int span_index_;
  int position_;
};

// Test-set builder could not reach the requested size under its constraints.
class ShortfallError : public DataError {
public:
  ShortfallError(int requested, int achievable);
  int requested() const noexcept { return requested_; }
  int achievable() const noexcept { return achievable_; }

private:
  int requested_;
  int achievable_;
};

}  // namespace pyab
