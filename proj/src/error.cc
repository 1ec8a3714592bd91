// src/error.cc

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

#include "selfecho/error.h"

namespace selfecho {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kNoGraph: return "NoGraph";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kInputTooLong: return "InputTooLong";
    case ErrorKind::kBadCutoff: return "BadCutoff";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kCorruptHeader: return "CorruptHeader";
    case ErrorKind::kCorruptFile: return "CorruptFile";
    case ErrorKind::kFactorOutOfRange: return "FactorOutOfRange";
    case ErrorKind::kBadConfig: return "BadConfig";
    case ErrorKind::kMissingPart: return "MissingPart";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kDuplicateEntry: return "DuplicateEntry";
    case ErrorKind::kNotEnoughData: return "NotEnoughData";
    case ErrorKind::kBadSpec: return "BadSpec";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::kLeakage: return "Leakage";
    case ErrorKind::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
      kind_(kind) {}

}  // namespace selfecho
