#pragma once

#include <stdexcept>
#include <string>

// Invalid arguments are reported with std::invalid_argument throughout; the
// types below cover the remaining failure kinds that callers branch on.

namespace aos {

/// Focal-plane search found no contrast to maximize.
class NoFocusFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Occlusion-patch augmentation could not find unlabeled pixels to sample.
class NoBackgroundSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  IoError(std::string file, const std::string& what)
      : std::runtime_error(file + ": " + what), file_(std::move(file)) {}
  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

/// Malformed input file; names the file and the offending field.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string file, std::string field, const std::string& what)
      : std::runtime_error(file + ": field '" + field + "': " + what),
        file_(std::move(file)),
        field_(std::move(field)) {}
  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

}  // namespace aos
