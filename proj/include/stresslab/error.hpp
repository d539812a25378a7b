// Copyright 2026 The stresslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
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

namespace stresslab {

/// Error categories raised by the library. Every throw site uses one of these
/// so callers (and tests) can dispatch on the code rather than the message.
enum class Errc {
  // stream_sync
  DuplicateStream,
  UnknownStream,
  NonMonotonicTimestamp,
  KindMismatch,
  ShapeMismatch,
  InvalidMarker,
  NoProbes,
  ParseError,
  DanglingStream,
  // game_core
  UnknownModule,
  GameOver,
  InvalidAction,
  // session_protocol
  BadPlan,
  // ecg_analysis
  BadParameter,
  EmptyInput,
  TooFewPeaks,
  TooFewIntervals,
  MalformedMarkers,
  MissingStream,
  // stats
  TooFewValues,
  DegenerateSE,
  // gateway / cli
  BindError,
  ProtocolError,
  IoError,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DuplicateStream: return "DuplicateStream";
    case Errc::UnknownStream: return "UnknownStream";
    case Errc::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidMarker: return "InvalidMarker";
    case Errc::NoProbes: return "NoProbes";
    case Errc::ParseError: return "ParseError";
    case Errc::DanglingStream: return "DanglingStream";
    case Errc::UnknownModule: return "UnknownModule";
    case Errc::GameOver: return "GameOver";
    case Errc::InvalidAction: return "InvalidAction";
    case Errc::BadPlan: return "BadPlan";
    case Errc::BadParameter: return "BadParameter";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TooFewPeaks: return "TooFewPeaks";
    case Errc::TooFewIntervals: return "TooFewIntervals";
    case Errc::MalformedMarkers: return "MalformedMarkers";
    case Errc::MissingStream: return "MissingStream";
    case Errc::TooFewValues: return "TooFewValues";
    case Errc::DegenerateSE: return "DegenerateSE";
    case Errc::BindError: return "BindError";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace stresslab
