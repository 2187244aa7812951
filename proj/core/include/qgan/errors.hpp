#pragma once

#include <stdexcept>
#include <string>

namespace qgan {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyTensor : public Error {
public:
  explicit EmptyTensor(const std::string& what = "tensor is empty") : Error(what) {}
};

class InvalidParams : public Error {
public:
  explicit InvalidParams(const std::string& what) : Error(what) {}
};

// Raised by minmax scaling when max(X) == min(X). Callers that accept
// constant tensors check for constancy first instead of catching this.
class ZeroRange : public Error {
public:
  explicit ZeroRange(const std::string& what = "max equals min, zero data range") : Error(what) {}
};

// Raised by the M-step when every code is identical (zero code variance).
class DegenerateCodes : public Error {
public:
  explicit DegenerateCodes(const std::string& what = "all codes equal, M-step denominator is zero")
      : Error(what) {}
};

class ShapeMismatch : public Error {
public:
  explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

class DuplicateName : public Error {
public:
  explicit DuplicateName(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class BadMagic : public Error {
public:
  explicit BadMagic(const std::string& what = "file does not start with the QGW1 magic") : Error(what) {}
};

class TruncatedFile : public Error {
public:
  explicit TruncatedFile(const std::string& what = "file ends before the declared payload") : Error(what) {}
};

class TooShort : public Error {
public:
  explicit TooShort(const std::string& what) : Error(what) {}
};

}  // namespace qgan
