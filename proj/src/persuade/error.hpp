// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace persuade {

/// Error categories shared by the C++ core and the C API status codes.
/// Values are part of the ABI: append only.
enum class ErrorCode : int {
    Ok = 0,
    Parse = 1,
    Validation = 2,
    Shape = 3,
    Numerical = 4,
    Decode = 5,
    BackendUnavailable = 6,
    Vocab = 7,
    EmptyCorpus = 8,
    Divergence = 9,
    EmptyPool = 10,
    Oracle = 11,
    Degenerate = 12,
    LengthMismatch = 13,
    MissingTags = 14,
    DuplicateId = 15,
    RosterTooSmall = 16,
    NoAssignment = 17,
    InsufficientAnnotations = 18,
    DimensionMismatch = 19,
    StrategyNotInFinalLabels = 20,
    UnknownRound = 21,
    RoundNotClosable = 22,
    NotFound = 23,
    Io = 24,
    InvalidArgument = 25,
    TaxonomyMismatch = 26,
    Conflict = 27,
    Unauthorized = 28,
    Internal = 99,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Named subclasses for the categories callers commonly catch by type.
#define PERSUADE_DEFINE_ERROR(Name)                                        \
    class Name##Error : public Error {                                     \
    public:                                                                \
        explicit Name##Error(const std::string& what)                      \
            : Error(ErrorCode::Name, what) {}                              \
    };

PERSUADE_DEFINE_ERROR(Parse)
PERSUADE_DEFINE_ERROR(Validation)
PERSUADE_DEFINE_ERROR(Shape)
PERSUADE_DEFINE_ERROR(Numerical)
PERSUADE_DEFINE_ERROR(Decode)
PERSUADE_DEFINE_ERROR(BackendUnavailable)
PERSUADE_DEFINE_ERROR(Vocab)
PERSUADE_DEFINE_ERROR(EmptyCorpus)
PERSUADE_DEFINE_ERROR(Divergence)
PERSUADE_DEFINE_ERROR(EmptyPool)
PERSUADE_DEFINE_ERROR(Oracle)
PERSUADE_DEFINE_ERROR(Degenerate)
PERSUADE_DEFINE_ERROR(LengthMismatch)
PERSUADE_DEFINE_ERROR(MissingTags)
PERSUADE_DEFINE_ERROR(DuplicateId)
PERSUADE_DEFINE_ERROR(RosterTooSmall)
PERSUADE_DEFINE_ERROR(NoAssignment)
PERSUADE_DEFINE_ERROR(InsufficientAnnotations)
PERSUADE_DEFINE_ERROR(DimensionMismatch)
PERSUADE_DEFINE_ERROR(StrategyNotInFinalLabels)
PERSUADE_DEFINE_ERROR(UnknownRound)
PERSUADE_DEFINE_ERROR(RoundNotClosable)
PERSUADE_DEFINE_ERROR(NotFound)
PERSUADE_DEFINE_ERROR(Io)
PERSUADE_DEFINE_ERROR(InvalidArgument)
PERSUADE_DEFINE_ERROR(TaxonomyMismatch)
PERSUADE_DEFINE_ERROR(Conflict)
PERSUADE_DEFINE_ERROR(Unauthorized)

#undef PERSUADE_DEFINE_ERROR

}  // namespace persuade
