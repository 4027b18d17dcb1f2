// include/sfd/error.hpp

// Copyright 2026  The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SFD_ERROR_HPP_
#define SFD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sfd {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file, record or model output.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad or missing configuration (unknown backend, unresolvable path, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by a backend for failures worth retrying (timeouts, 429, 5xx).
class TransientError : public Error {
 public:
  using Error::Error;
};

// Retries exhausted.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

}  // namespace sfd

#endif  // SFD_ERROR_HPP_
