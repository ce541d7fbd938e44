#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fragseg {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FRAGSEG_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

FRAGSEG_DEFINE_ERROR(MissingFile)
FRAGSEG_DEFINE_ERROR(DecodeError)
FRAGSEG_DEFINE_ERROR(DimensionMismatch)
FRAGSEG_DEFINE_ERROR(JsonParseError)
FRAGSEG_DEFINE_ERROR(NegativeDimension)
FRAGSEG_DEFINE_ERROR(UnknownExtractor)
FRAGSEG_DEFINE_ERROR(MetricMismatch)
FRAGSEG_DEFINE_ERROR(EmptySet)
FRAGSEG_DEFINE_ERROR(TooFewMatches)
FRAGSEG_DEFINE_ERROR(DegenerateInput)
FRAGSEG_DEFINE_ERROR(AlignmentFailed)
FRAGSEG_DEFINE_ERROR(SingularTransform)
FRAGSEG_DEFINE_ERROR(UnrepairableGeometry)
FRAGSEG_DEFINE_ERROR(OutOfBounds)
FRAGSEG_DEFINE_ERROR(EmptyList)
FRAGSEG_DEFINE_ERROR(IoError)

#undef FRAGSEG_DEFINE_ERROR

/// WKT syntax error. `offset` is the character position in the input text.
class WktParseError : public Error {
 public:
  WktParseError(const std::string& message, std::size_t offset, std::string file = {})
      : Error(format(message, offset, file)), offset_(offset), file_(std::move(file)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& file() const noexcept { return file_; }

 private:
  static std::string format(const std::string& message, std::size_t offset, const std::string& file) {
    std::string out = file.empty() ? std::string("WKT") : file;
    out += ": offset " + std::to_string(offset) + ": " + message;
    return out;
  }

  std::size_t offset_;
  std::string file_;
};

}  // namespace fragseg
