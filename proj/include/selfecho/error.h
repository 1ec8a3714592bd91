// include/selfecho/error.h

// Copyright 2026  selfecho authors

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

#ifndef SELFECHO_ERROR_H_
#define SELFECHO_ERROR_H_

#include <stdexcept>
#include <string>

namespace selfecho {

enum class ErrorKind {
  kShapeMismatch,
  kNonFinite,
  kNoGraph,
  kTooShort,
  kInputTooLong,
  kBadCutoff,
  kUnsupportedFormat,
  kCorruptHeader,
  kCorruptFile,
  kFactorOutOfRange,
  kBadConfig,
  kMissingPart,
  kEmptyCorpus,
  kCorruptCheckpoint,
  kParseError,
  kDuplicateEntry,
  kNotEnoughData,
  kBadSpec,
  kLengthMismatch,
  kMissingGroundTruth,
  kLeakage,
  kIoFailure,
};

const char *ErrorKindName(ErrorKind kind);

// Every failure in the library is reported through this type; `kind()`
// lets callers (the CLI in particular) map failures onto stable codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace selfecho

#endif  // SELFECHO_ERROR_H_
