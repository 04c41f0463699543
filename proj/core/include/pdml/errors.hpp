#pragma once

#include <stdexcept>
#include <string>

namespace pdml {

/** Invalid or inconsistent configuration: unknown keys, bad option values. */
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Malformed input data: CSV rows, split files, checkpoints. */
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** API misuse: mismatched dimensions, unknown labels, out-of-range arguments. */
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Non-finite values where finite arithmetic is required. */
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pdml
