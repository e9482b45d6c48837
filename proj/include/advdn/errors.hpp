#pragma once

#include <stdexcept>
#include <string>

namespace advdn {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or corrupt image data.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Readable data in a layout or bit depth we do not support.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class AttackError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A referenced model, dataset or artifact could not be found.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// An append-only artifact already exists with different content.
class ArtifactConflict : public Error {
 public:
  using Error::Error;
};

}  // namespace advdn
