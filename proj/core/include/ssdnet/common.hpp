/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdnet {

// Scalar type of all tensor storage. The production build uses 32-bit reals;
// compiling with SSDNET_REAL_IS_DOUBLE produces the 64-bit check build used
// by the tight gradient-verification suite.
#if defined(SSDNET_REAL_IS_DOUBLE)
using real = double;
#else
using real = float;
#endif

// Reductions and contractions always accumulate in double regardless of the
// storage type.
using acc_t = double;

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, truncation, bad header fields).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Worker cap resolved from the SSDNET_THREADS environment variable (>=1).
int worker_limit();

// Runs fn(i) for i in [0, n). Uses up to worker_limit() threads; results must
// not depend on the assignment of indices to workers.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace ssdnet
