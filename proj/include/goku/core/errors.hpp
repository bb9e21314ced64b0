#pragma once

#include <stdexcept>
#include <string>

namespace goku {

// Bad caller input: mismatched dimensions, invalid configs, unknown keys.
class InvalidArgument : public std::invalid_argument {
  public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// A solve produced NaN/Inf; carries the step index where it was detected.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& msg, long step)
        : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_index(step) {}
    long step_index;
};

// Stored dataset/checkpoint does not match its manifest.
class CorruptDataset : public std::runtime_error {
  public:
    explicit CorruptDataset(const std::string& msg) : std::runtime_error(msg) {}
};

// Input is structurally valid but unusable (e.g. zero variance).
class DegenerateInput : public std::runtime_error {
  public:
    explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Text input failed to parse; carries 1-based row/column location.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, long row, long col)
        : std::runtime_error(msg + " (row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ")"),
          row(row), col(col) {}
    long row;
    long col;
};

// A search (e.g. parameter-count matching) found no candidate within tolerance.
class NoSolutionError : public std::runtime_error {
  public:
    explicit NoSolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite; message carries the diagnostic dump.
class NonFiniteLossError : public std::runtime_error {
  public:
    explicit NonFiniteLossError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace goku
