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

#include "persuade/error.hpp"

namespace persuade {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::Parse: return "ParseError";
        case ErrorCode::Validation: return "ValidationError";
        case ErrorCode::Shape: return "ShapeError";
        case ErrorCode::Numerical: return "NumericalError";
        case ErrorCode::Decode: return "DecodeError";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::Vocab: return "VocabError";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::Divergence: return "DivergenceError";
        case ErrorCode::EmptyPool: return "EmptyPool";
        case ErrorCode::Oracle: return "OracleError";
        case ErrorCode::Degenerate: return "DegenerateError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::MissingTags: return "MissingTags";
        case ErrorCode::DuplicateId: return "DuplicateIdError";
        case ErrorCode::RosterTooSmall: return "RosterTooSmall";
        case ErrorCode::NoAssignment: return "NoAssignment";
        case ErrorCode::InsufficientAnnotations: return "InsufficientAnnotations";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::StrategyNotInFinalLabels: return "StrategyNotInFinalLabels";
        case ErrorCode::UnknownRound: return "UnknownRound";
        case ErrorCode::RoundNotClosable: return "RoundNotClosable";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::TaxonomyMismatch: return "TaxonomyMismatch";
        case ErrorCode::Conflict: return "Conflict";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::Internal: return "InternalError";
    }
    return "UnknownError";
}

}  // namespace persuade
